#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "fakediff/error.hpp"

namespace fakediff {

/// Bracketed root of a continuous function: bisection with secant acceleration
/// (Illinois-modified false position, falling back to a bisection whenever three
/// consecutive steps fail to halve the bracket). Requires f(lo), f(hi) of opposite
/// sign. Stops once the bracket is narrower than max(rel_tol * |x|, abs_tol).
template <class F>
double solve_bracketed(F&& f, double lo, double hi, double rel_tol = 1e-15, double abs_tol = 0.0,
                       int max_iter = 500) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (!(std::isfinite(flo) && std::isfinite(fhi)) || (flo < 0.0) == (fhi < 0.0)) {
        throw DomainError("solve_bracketed: root is not bracketed");
    }
    if (lo > hi) {
        std::swap(lo, hi);
        std::swap(flo, fhi);
    }
    int side = 0;
    int stalled = 0;
    double checkpoint = hi - lo;
    for (int it = 0; it < max_iter; ++it) {
        const double width = hi - lo;
        const double mid = 0.5 * (lo + hi);
        const double tol = std::max({rel_tol * std::abs(mid), abs_tol, 4.0 * std::numeric_limits<double>::min()});
        if (width <= tol || mid == lo || mid == hi) return mid;

        double x;
        if (stalled >= 3) {
            x = mid;
            stalled = 0;
            side = 0;
        } else {
            x = (lo * fhi - hi * flo) / (fhi - flo);
            if (!(x > lo && x < hi)) x = mid;
        }

        const double fx = f(x);
        if (fx == 0.0) return x;
        if ((fx < 0.0) == (flo < 0.0)) {
            lo = x;
            flo = fx;
            if (side == -1) fhi *= 0.5;
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if (side == +1) flo *= 0.5;
            side = +1;
        }
        if (hi - lo <= 0.5 * checkpoint) {
            checkpoint = hi - lo;
            stalled = 0;
        } else {
            ++stalled;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace fakediff
