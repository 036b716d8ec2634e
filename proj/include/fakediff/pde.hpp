#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "fakediff/error.hpp"
#include "fakediff/mixture.hpp"

namespace fakediff {

/// Thomas algorithm for a tridiagonal system; `lower[0]` and `upper[n-1]` are ignored.
/// Solves in place into `rhs`.
inline void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                              std::span<const double> upper, std::span<double> rhs) {
    const std::size_t n = diag.size();
    if (n == 0) return;
    std::vector<double> c(n);
    double beta = diag[0];
    if (beta == 0.0) throw DomainError("tridiagonal solve: zero pivot");
    rhs[0] /= beta;
    for (std::size_t i = 1; i < n; ++i) {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        if (beta == 0.0 || !std::isfinite(beta)) throw DomainError("tridiagonal solve: zero pivot");
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

struct PdeGrid {
    std::size_t n_space = 401; // nodes, boundaries included
    std::size_t n_time = 400;  // steps
    double n_sd = 6.0;         // half-width in units of sqrt(L^2 T)
    std::size_t rannacher = 1; // leading steps each replaced by two implicit half-steps
};

/// Call prices C(t_i, y_j) on a time x strike grid, row-major in time.
struct CallSurface {
    std::vector<double> times;
    std::vector<double> states;
    std::vector<double> values;
    double x0 = 0.0;
    bool log_axis = false;

    std::size_t n_times() const { return times.size(); }
    std::size_t n_states() const { return states.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * states.size() + j]; }
    std::span<const double> slice(std::size_t i) const {
        return {values.data() + i * states.size(), states.size()};
    }
};

/// Forward Dupire equation C_t = eta(t,y)^2 / 2 C_yy with C(0,y) = (x0 - y)^+,
/// theta = 1/2 in time and central differences in space. Positive laws are solved
/// in u = ln(y / x0) on [-w, w], w = n_sd sqrt(L^2 T); real-line laws in y on x0 +- w.
/// Dirichlet data: C = x0 - y at the bottom, 0 at the top.
inline CallSurface solve_dupire(const FakeSpec& spec, double T, const PdeGrid& g = {}) {
    if (!(T > 0.0)) throw DomainError("solve_dupire: T must be > 0");
    if (g.n_space < 3 || g.n_time < 1) throw DomainError("solve_dupire: grid too small");
    const auto& law = spec.law();
    const double x0 = law.x0();
    const bool log_axis = law.positive();
    const double w = g.n_sd * std::sqrt(spec.L2() * T);
    const std::size_t J = g.n_space - 1;
    const double h = 2.0 * w / static_cast<double>(J);

    CallSurface s;
    s.x0 = x0;
    s.log_axis = log_axis;
    s.states.resize(g.n_space);
    for (std::size_t j = 0; j <= J; ++j) {
        const double z = j == J ? w : -w + h * static_cast<double>(j);
        s.states[j] = log_axis ? x0 * std::exp(z) : x0 + z;
    }
    s.times.resize(g.n_time + 1);
    for (std::size_t i = 0; i <= g.n_time; ++i)
        s.times[i] = i == g.n_time ? T : T * static_cast<double>(i) / static_cast<double>(g.n_time);
    s.values.assign(s.times.size() * g.n_space, 0.0);
    for (std::size_t j = 0; j <= J; ++j) s.values[j] = std::max(x0 - s.states[j], 0.0);

    const double bottom = x0 - s.states.front();
    const std::size_t n = J - 1; // interior unknowns

    // Spatial operator at time t: (L C)_j = lo_j C_{j-1} + di_j C_j + up_j C_{j+1}.
    // On the log axis the drift weight tanh(h/2)/h^2 replaces 1/(2h) so that L
    // annihilates both 1 and y = e^u; plain central differences leave -e^u h^2/12
    // on the linear branch and bend the surface near the lower boundary.
    const double drift_w = std::tanh(0.5 * h) / (h * h);
    std::vector<double> lo(n), di(n), up(n);
    auto assemble = [&](double t) {
        const ClockSlice cs = clock_slice(spec, t);
        for (std::size_t k = 0; k < n; ++k) {
            const double y = s.states[k + 1];
            const double sg = law.sigma(y);
            const double f = eta2_factor(spec, cs, y);
            if (log_axis) {
                const double q = sg / y;
                const double a = 0.5 * f * q * q;
                lo[k] = a * (1.0 / (h * h) + drift_w);
                di[k] = -2.0 * a / (h * h);
                up[k] = a * (1.0 / (h * h) - drift_w);
            } else {
                const double a = 0.5 * f * sg * sg / (h * h);
                lo[k] = a;
                di[k] = -2.0 * a;
                up[k] = a;
            }
        }
    };

    std::vector<double> cur(s.values.begin(), s.values.begin() + static_cast<std::ptrdiff_t>(g.n_space));
    std::vector<double> rhs(n), ml(n), md(n), mu(n), Lc(n);

    // One theta-step of length dt ending at t_new; explicit part uses the operator at t_old.
    auto step = [&](double t_old, double t_new, double theta) {
        const double dt = t_new - t_old;
        if (theta < 1.0) {
            assemble(t_old);
            for (std::size_t k = 0; k < n; ++k)
                Lc[k] = lo[k] * cur[k] + di[k] * cur[k + 1] + up[k] * cur[k + 2];
        }
        assemble(t_new);
        for (std::size_t k = 0; k < n; ++k) {
            rhs[k] = cur[k + 1] + (theta < 1.0 ? (1.0 - theta) * dt * Lc[k] : 0.0);
            ml[k] = -theta * dt * lo[k];
            md[k] = 1.0 - theta * dt * di[k];
            mu[k] = -theta * dt * up[k];
        }
        // Boundary values are time-independent.
        rhs[0] -= ml[0] * bottom;
        rhs[n - 1] -= mu[n - 1] * 0.0;
        solve_tridiagonal(ml, md, mu, rhs);
        cur[0] = bottom;
        for (std::size_t k = 0; k < n; ++k) cur[k + 1] = rhs[k];
        cur[J] = 0.0;
    };

    for (std::size_t i = 1; i <= g.n_time; ++i) {
        const double t0 = s.times[i - 1];
        const double t1 = s.times[i];
        if (i <= g.rannacher) {
            // eta is never needed at t = 0: implicit steps only evaluate at their end time.
            const double tm = 0.5 * (t0 + t1);
            step(t0, tm, 1.0);
            step(tm, t1, 1.0);
        } else if (i == 1) {
            step(t0, t1, 1.0);
        } else {
            step(t0, t1, 0.5);
        }
        std::copy(cur.begin(), cur.end(), s.values.begin() + static_cast<std::ptrdiff_t>(i * g.n_space));
    }
    return s;
}

/// Worst observed values of each call-surface invariant.
struct SurfaceAudit {
    double initial_error = 0.0;      // max |C(0,y) - (x0-y)^+|
    double min_convexity = 0.0;      // min chord excess over the middle node, in price units
    double min_time_increment = 0.0; // min C(t_{i+1},y) - C(t_i,y) (>= -1e-10 required)
    double bound_violation = 0.0;    // max excursion outside the admissible band
    double bottom_gap = 0.0;         // max |C(t, y_min) - (x0 - y_min)|

    bool ok(double tol = 1e-10) const {
        return initial_error <= tol && min_convexity >= -tol && min_time_increment >= -tol && bound_violation <= tol;
    }
};

/// Band: (x0-y)^+ <= C <= x0 for positive laws; (x0-y)^+ <= C <= (x0-y)^+ + J(T) otherwise.
inline SurfaceAudit audit_surface(const CallSurface& s, const FakeSpec& spec) {
    SurfaceAudit a;
    const std::size_t ny = s.n_states();
    const double band = s.log_axis ? 0.0 : call_band_width(spec, s.times.back());
    for (std::size_t j = 0; j < ny; ++j)
        a.initial_error = std::max(a.initial_error, std::abs(s.at(0, j) - std::max(s.x0 - s.states[j], 0.0)));
    a.min_convexity = std::numeric_limits<double>::infinity();
    a.min_time_increment = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.n_times(); ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            const double c = s.at(i, j);
            const double intrinsic = std::max(s.x0 - s.states[j], 0.0);
            const double upper = s.log_axis ? s.x0 : intrinsic + band;
            a.bound_violation = std::max({a.bound_violation, intrinsic - c, c - upper});
            if (i + 1 < s.n_times()) a.min_time_increment = std::min(a.min_time_increment, s.at(i + 1, j) - c);
            if (j > 0 && j + 1 < ny) {
                const double lam = (s.states[j + 1] - s.states[j]) / (s.states[j + 1] - s.states[j - 1]);
                const double chord = lam * s.at(i, j - 1) + (1.0 - lam) * s.at(i, j + 1);
                a.min_convexity = std::min(a.min_convexity, chord - c);
            }
        }
        a.bottom_gap = std::max(a.bottom_gap, std::abs(s.at(i, 0) - (s.x0 - s.states.front())));
    }
    return a;
}

/// Max |C_pde - C_ref| over interior nodes of time row i.
inline double max_interior_error(const CallSurface& s, std::size_t i, const std::function<double(double)>& reference) {
    double err = 0.0;
    for (std::size_t j = 1; j + 1 < s.n_states(); ++j) err = std::max(err, std::abs(s.at(i, j) - reference(s.states[j])));
    return err;
}

} // namespace fakediff
