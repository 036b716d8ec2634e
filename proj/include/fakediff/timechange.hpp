#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "fakediff/error.hpp"
#include "fakediff/grid.hpp"
#include "fakediff/laws.hpp"
#include "fakediff/roots.hpp"

namespace fakediff {

/// psi(t) = sqrt(t) e^{t/8}; f_t(1) / f_s(1) = psi(s) / psi(t) for the lognormal family.
inline double psi(double t) {
    if (t < 0.0) throw DomainError("psi: t must be >= 0");
    return std::sqrt(t) * std::exp(t / 8.0);
}

/// phi(t) = (t + 4) / (8t) = d/dt ln psi(t).
inline double phi(double t) {
    if (!(t > 0.0)) throw DomainError("phi: t must be > 0");
    return (t + 4.0) / (8.0 * t);
}

enum class ClockKind { brownian, exponential_brownian, tabulated };

inline std::string_view to_string(ClockKind k) {
    switch (k) {
    case ClockKind::brownian: return "brownian";
    case ClockKind::exponential_brownian: return "exponential-brownian";
    case ClockKind::tabulated: return "tabulated";
    }
    return "unknown";
}

/// The slowdown clock a(t) with its derivative and the ratio bound K it was built for.
class TimeChange {
public:
    using Fn = std::function<double(double)>;

    TimeChange(ClockKind kind, double K, Fn a, Fn a_dot)
        : kind_(kind), K_(K), a_(std::move(a)), a_dot_(std::move(a_dot)) {}

    ClockKind kind() const { return kind_; }
    double K() const { return K_; }

    double a(double t) const {
        if (t < 0.0) throw DomainError("clock: t must be >= 0");
        return a_(t);
    }
    double a_dot(double t) const {
        if (t < 0.0) throw DomainError("clock: t must be >= 0");
        return a_dot_(t);
    }

private:
    ClockKind kind_;
    double K_;
    Fn a_;
    Fn a_dot_;
};

inline void require_ratio_bound(double K) {
    if (!(K > 0.0 && K < 1.0)) throw ValidationError(ValidationCode::invalid_k, "K must lie in (0,1)");
}

/// Solves psi(a) = K psi(t) for a in (K^2 t, t), working with ln psi to avoid overflow.
inline double ebm_clock(double K, double t) {
    if (t == 0.0) return 0.0;
    const double target = std::log(K) + 0.5 * std::log(t) + t / 8.0;
    auto g = [target](double a) { return 0.5 * std::log(a) + a / 8.0 - target; };
    return solve_bracketed(g, K * K * t, t, 1e-15);
}

/// Example-2 clock for exponential Brownian motion: a = psi^{-1}(K psi(t)),
/// a_dot = phi(t) / phi(a(t)), a_dot(0+) = K^2.
inline TimeChange make_timechange_ebm(double K) {
    require_ratio_bound(K);
    auto a = [K](double t) { return ebm_clock(K, t); };
    auto a_dot = [K](double t) {
        if (t == 0.0) return K * K;
        return phi(t) / phi(ebm_clock(K, t));
    };
    return TimeChange(ClockKind::exponential_brownian, K, a, a_dot);
}

/// Example-1 clock for Brownian motion: a(t) = K^2 t.
inline TimeChange make_timechange_bm(double K) {
    require_ratio_bound(K);
    const double k2 = K * K;
    return TimeChange(
        ClockKind::brownian, K, [k2](double t) { return k2 * t; }, [k2](double) { return k2; });
}

inline TimeChange make_timechange(const DiffusionLaw& law, double K) {
    return law.kind() == LawKind::brownian ? make_timechange_bm(K) : make_timechange_ebm(K);
}

namespace detail {

// Fritsch-Carlson monotone cubic Hermite interpolant; linear beyond the last node.
struct MonotoneCubic {
    std::vector<double> x, y, m;

    MonotoneCubic(std::vector<double> xs, std::vector<double> ys) : x(std::move(xs)), y(std::move(ys)) {
        const std::size_t n = x.size();
        std::vector<double> d(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        m.resize(n);
        m[0] = d[0];
        m[n - 1] = d[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) m[i] = (d[i - 1] * d[i] <= 0.0) ? 0.0 : 0.5 * (d[i - 1] + d[i]);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (d[i] == 0.0) {
                m[i] = m[i + 1] = 0.0;
                continue;
            }
            const double al = m[i] / d[i];
            const double be = m[i + 1] / d[i];
            const double s = al * al + be * be;
            if (s > 9.0) {
                const double tau = 3.0 / std::sqrt(s);
                m[i] = tau * al * d[i];
                m[i + 1] = tau * be * d[i];
            }
        }
    }

    std::size_t segment(double t) const {
        auto it = std::upper_bound(x.begin(), x.end(), t);
        std::size_t i = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
        return std::min(i, x.size() - 2);
    }

    double value(double t) const {
        if (t >= x.back()) return y.back() + m.back() * (t - x.back());
        const std::size_t i = segment(t);
        const double h = x[i + 1] - x[i];
        const double s = (t - x[i]) / h;
        const double s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * y[i] + (s3 - 2 * s2 + s) * h * m[i] + (-2 * s3 + 3 * s2) * y[i + 1] +
               (s3 - s2) * h * m[i + 1];
    }

    double derivative(double t) const {
        if (t >= x.back()) return m.back();
        const std::size_t i = segment(t);
        const double h = x[i + 1] - x[i];
        const double s = (t - x[i]) / h;
        const double s2 = s * s;
        return (6 * s2 - 6 * s) / h * y[i] + (3 * s2 - 4 * s + 1) * m[i] + (-6 * s2 + 6 * s) / h * y[i + 1] +
               (3 * s2 - 2 * s) * m[i + 1];
    }
};

} // namespace detail

/// A clock interpolated through (t_i, a_i) nodes, t_0 = 0. K is the ratio bound the
/// caller claims for it; validate_spec audits the claim. K = 1 is accepted here so
/// that degenerate clocks (a(t) = t) can be built and rejected by validation.
inline TimeChange make_timechange_tabulated(double K, std::vector<double> times, std::vector<double> values) {
    if (!(K > 0.0 && K <= 1.0)) throw ValidationError(ValidationCode::invalid_k, "K must lie in (0,1]");
    if (times.size() < 2 || times.size() != values.size())
        throw ValidationError(ValidationCode::degenerate_grid, "tabulated clock needs >= 2 matching nodes");
    if (times.front() != 0.0)
        throw ValidationError(ValidationCode::degenerate_grid, "tabulated clock must start at t = 0");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1]))
            throw ValidationError(ValidationCode::degenerate_grid, "tabulated clock times must increase");
    }
    auto interp = std::make_shared<const detail::MonotoneCubic>(std::move(times), std::move(values));
    return TimeChange(
        ClockKind::tabulated, K, [interp](double t) { return interp->value(t); },
        [interp](double t) { return interp->derivative(t); });
}

struct RatioInfimum {
    double value = std::numeric_limits<double>::infinity();
    double t = 0.0;
    double y = 0.0;
};

/// Grid infimum of f_t(y) / f_{a(t)}(y) on a fixed state grid.
inline RatioInfimum ratio_infimum(const DiffusionLaw& law, const TimeChange& tc, std::span<const double> t_grid,
                                  std::span<const double> y_grid) {
    if (t_grid.empty() || y_grid.empty())
        throw ValidationError(ValidationCode::degenerate_grid, "ratio_infimum: empty grid");
    RatioInfimum best;
    for (double t : t_grid) {
        if (!(t > 0.0)) throw ValidationError(ValidationCode::degenerate_grid, "ratio_infimum: t must be > 0");
        const double at = tc.a(t);
        for (double y : y_grid) {
            if (!law.contains(y))
                throw ValidationError(ValidationCode::degenerate_grid, "ratio_infimum: state outside interval");
            const double r = std::exp(-law.log_density_ratio(at, t, y));
            if (r < best.value) best = {r, t, y};
        }
    }
    return best;
}

/// Same, on the time-dependent audit grid (64 log-spaced times x 201 states by default).
inline RatioInfimum ratio_infimum(const DiffusionLaw& law, const TimeChange& tc, const AuditGrid& grid = {}) {
    if (grid.times.empty() || grid.n_states == 0)
        throw ValidationError(ValidationCode::degenerate_grid, "ratio_infimum: empty grid");
    RatioInfimum best;
    for (double t : grid.times) {
        const auto ys = grid.states(law, t);
        auto r = ratio_infimum(law, tc, std::span<const double>(&t, 1), ys);
        if (r.value < best.value) best = r;
    }
    return best;
}

} // namespace fakediff
