#pragma once

#include <cmath>
#include <numbers>

namespace fakediff {

inline constexpr double inv_sqrt_2pi = 0.39894228040143267794; // 1/sqrt(2 pi)

inline double norm_pdf(double x) { return inv_sqrt_2pi * std::exp(-0.5 * x * x); }

/// Standard normal CDF through erfc; keeps full relative accuracy in the lower tail.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Mills ratio R(z) = Phi(-z) / phi(z). Continued fraction above z = 8, direct below.
inline double mills_ratio(double z) {
    if (z < 8.0) return norm_cdf(-z) / norm_pdf(z);
    // Modified Lentz evaluation of 1/(z + 1/(z + 2/(z + 3/(z + ...)))).
    constexpr double tiny = 1e-300;
    double f = z;
    double c = z;
    double d = 0.0;
    for (int k = 1; k < 500; ++k) {
        d = z + k * d;
        if (d == 0.0) d = tiny;
        c = z + k / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return 1.0 / f;
}

} // namespace fakediff
