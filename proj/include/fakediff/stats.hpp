#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fakediff/error.hpp"
#include "fakediff/roots.hpp"

namespace fakediff {

struct KsResult {
    double statistic;
    double p_value;
};

/// Kolmogorov distribution tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} e^{-2 k^2 lambda^2}.
inline double kolmogorov_q(double lambda) {
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-18 * std::abs(sum) || term == 0.0) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// Asymptotic p-value of a KS distance D at effective sample size n, with
/// Stephens' small-sample correction of the argument.
inline double ks_p_value(double d, double n) {
    const double sn = std::sqrt(n);
    return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

/// Smallest D rejected at level alpha for effective sample size n (asymptotic form,
/// Q(sqrt(n) D) = alpha).
inline double ks_critical_value(double alpha, double n) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("ks_critical_value: alpha must lie in (0,1)");
    if (!(n > 0.0)) throw DomainError("ks_critical_value: n must be > 0");
    const double lambda = solve_bracketed([alpha](double l) { return alpha - kolmogorov_q(l); }, 0.2, 20.0, 1e-14);
    return lambda / std::sqrt(n);
}

/// One-sample KS test of samples against a continuous CDF.
template <class Cdf>
KsResult ks_test(std::span<const double> samples, Cdf&& cdf) {
    if (samples.empty()) throw DomainError("ks_test: empty sample");
    std::vector<double> x(samples.begin(), samples.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return {d, ks_p_value(d, n)};
}

/// Two-sample KS test.
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    return {d, ks_p_value(d, nx * ny / (nx + ny))};
}

struct SampleMoments {
    double mean;
    double stddev;
    double std_error;
    std::size_t n;
};

inline SampleMoments moments(std::span<const double> v) {
    if (v.empty()) throw DomainError("moments: empty sample");
    const double n = static_cast<double>(v.size());
    double m = 0.0;
    for (double x : v) m += x;
    m /= n;
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return {m, sd, sd / std::sqrt(n), v.size()};
}

} // namespace fakediff
