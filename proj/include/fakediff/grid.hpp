#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "fakediff/error.hpp"
#include "fakediff/laws.hpp"

namespace fakediff {

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n == 0) return {};
    if (n == 1) return {lo};
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        // -1 + 2i/(n-1) style so the midpoint of an odd grid is exact.
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    v.back() = hi;
    return v;
}

inline std::vector<double> logspace(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > 0.0)) throw DomainError("logspace: bounds must be > 0");
    auto v = linspace(std::log(lo), std::log(hi), n);
    for (auto& x : v) x = std::exp(x);
    if (n > 0) {
        v.front() = lo;
        v.back() = hi;
    }
    return v;
}

/// Time x state audit grid: log-spaced times, and at each time a state grid
/// spanning +-n_sd standard deviations around x0 (in ln x for positive laws).
/// With an odd state count the middle node is x0 exactly.
struct AuditGrid {
    std::vector<double> times = logspace(1e-3, 16.0, 64);
    std::size_t n_states = 201;
    double n_sd = 6.0;

    std::vector<double> states(const DiffusionLaw& law, double t) const {
        const double w = n_sd * std::sqrt(t);
        std::vector<double> s(n_states);
        for (std::size_t j = 0; j < n_states; ++j) {
            const double z = n_states == 1 ? 0.0
                                           : -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(n_states - 1);
            s[j] = law.positive() ? law.x0() * std::exp(w * z) : law.x0() + w * z;
        }
        return s;
    }
};

} // namespace fakediff
