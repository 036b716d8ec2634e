#pragma once

#include <cmath>
#include <limits>
#include <cstdio>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fakediff/error.hpp"

namespace fakediff {

struct QuadratureOptions {
    double rel_tol = 1e-9;
    unsigned max_depth = 25;
};

/// Adaptive 15-point Gauss-Kronrod on [lo, hi]. Throws QuadratureError when the
/// error estimate still exceeds 100 * rel_tol * L1 after max_depth bisections.
template <class F>
double integrate(F&& f, double lo, double hi, const QuadratureOptions& opt = {}) {
    if (!(hi > lo)) return 0.0;
    // Boost compares the interval-scaled estimate with an unscaled local error,
    // so the integral is always posed on [-1, 1] to keep the two consistent.
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    auto g = [&](double s) { return half * f(mid + half * s); };
    double err = 0.0;
    double l1 = 0.0;
    const double value =
        boost::math::quadrature::gauss_kronrod<double, 15>::integrate(g, -1.0, 1.0, opt.max_depth, opt.rel_tol, &err, &l1);
    // The estimate is |K15 - G7| summed over pieces, which on smooth integrands
    // overstates the Kronrod error by orders of magnitude; the factor 100 keeps
    // the gate for genuine non-convergence only. The absolute floor covers
    // integrands that vanish to ~1e-300.
    const double allowed = 100.0 * opt.rel_tol * l1 + 64.0 * std::numeric_limits<double>::min();
    if (!std::isfinite(value) || err > allowed) {
        char msg[160];
        std::snprintf(msg, sizeof msg, "quadrature did not converge on [%g, %g]: error estimate %.3e vs allowed %.3e",
                      lo, hi, err, allowed);
        throw QuadratureError(msg);
    }
    return value;
}

/// Integrates g(x) dx over [exp(u_lo), exp(u_hi)] in the variable u = ln x.
template <class F>
double integrate_log_axis(F&& g, double u_lo, double u_hi, const QuadratureOptions& opt = {}) {
    return integrate(
        [&](double u) {
            const double x = std::exp(u);
            return g(x) * x;
        },
        u_lo, u_hi, opt);
}

} // namespace fakediff
