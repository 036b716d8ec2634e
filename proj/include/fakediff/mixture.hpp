#pragma once

#include <cmath>
#include <string>

#include "fakediff/error.hpp"
#include "fakediff/grid.hpp"
#include "fakediff/laws.hpp"
#include "fakediff/timechange.hpp"

namespace fakediff {

/// A validated mixture construction: f_t = c f_{a(t)} + (1 - c) h_t with 0 < c < K < 1.
/// Only validate_spec creates one.
class FakeSpec {
public:
    const DiffusionLaw& law() const { return law_; }
    const TimeChange& clock() const { return clock_; }
    double c() const { return c_; }
    double K() const { return clock_.K(); }
    /// Upper bound on eta^2 / sigma^2: K / (K - c).
    double L2() const { return clock_.K() / (clock_.K() - c_); }
    /// Grid infimum of f_t / f_{a(t)} measured during validation.
    double K_estimate() const { return k_estimate_; }

private:
    FakeSpec(DiffusionLaw law, TimeChange clock, double c, double k_estimate)
        : law_(std::move(law)), clock_(std::move(clock)), c_(c), k_estimate_(k_estimate) {}

    friend FakeSpec validate_spec(const DiffusionLaw&, const TimeChange&, double, const AuditGrid&);

    DiffusionLaw law_;
    TimeChange clock_;
    double c_;
    double k_estimate_;
};

/// Checks every precondition of the construction on the audit grid:
/// 0 < c < K, a(0) = 0, 0 < a_dot < 1, a strictly increasing with a(t) < t, and
/// the grid infimum of f_t / f_{a(t)} strictly above c.
inline FakeSpec validate_spec(const DiffusionLaw& law, const TimeChange& clock, double c, const AuditGrid& grid = {}) {
    if (!(c > 0.0 && c < clock.K())) {
        throw ValidationError(ValidationCode::c_out_of_range,
                              "c = " + std::to_string(c) + " must lie in (0, K = " + std::to_string(clock.K()) + ")");
    }
    if (grid.times.empty() || grid.n_states == 0)
        throw ValidationError(ValidationCode::degenerate_grid, "empty audit grid");

    for (double t : grid.times) {
        const double rate = clock.a_dot(t);
        if (!(rate < 1.0)) {
            throw ValidationError(ValidationCode::clock_rate_too_large,
                                  "a_dot(" + std::to_string(t) + ") = " + std::to_string(rate) + " is not < 1");
        }
    }
    if (clock.a(0.0) != 0.0) throw ValidationError(ValidationCode::clock_not_monotone, "a(0) must be 0");
    double prev = 0.0;
    for (double t : grid.times) {
        const double at = clock.a(t);
        if (!(at > prev) || !(at < t) || !(clock.a_dot(t) > 0.0)) {
            throw ValidationError(ValidationCode::clock_not_monotone,
                                  "clock must be strictly increasing with 0 < a(t) < t; fails at t = " +
                                      std::to_string(t));
        }
        prev = at;
    }

    const auto inf = ratio_infimum(law, clock, grid);
    if (!(inf.value > c)) {
        throw ValidationError(ValidationCode::k_estimate_too_small,
                              "grid infimum of f_t/f_a(t) = " + std::to_string(inf.value) + " is not > c");
    }
    return FakeSpec(law, clock, c, inf.value);
}

/// Clock values at one time, cached so path loops do not re-solve for a(t).
struct ClockSlice {
    double t;
    double a;
    double a_dot;
};

inline ClockSlice clock_slice(const FakeSpec& spec, double t) {
    if (!(t > 0.0)) throw DomainError("clock slice: t must be > 0");
    return {t, spec.clock().a(t), spec.clock().a_dot(t)};
}

/// f_{a(t)}(y) / f_t(y).
inline double slowed_density_ratio(const FakeSpec& spec, const ClockSlice& s, double y) {
    return std::exp(spec.law().log_density_ratio(s.a, s.t, y));
}

/// h_t(y) = (f_t(y) - c f_{a(t)}(y)) / (1 - c).
inline double residual_density(const FakeSpec& spec, double t, double y) {
    if (!(t > 0.0)) throw DomainError("residual_density: t must be > 0");
    const auto& law = spec.law();
    if (!law.contains(y)) return 0.0;
    const double c = spec.c();
    const double h = (law.density(t, y) - c * law.density(spec.clock().a(t), y)) / (1.0 - c);
    if (h < 0.0) throw DomainError("residual_density: negative density, spec violates c < K");
    return h;
}

inline double residual_cdf(const FakeSpec& spec, double t, double y) {
    if (!(t > 0.0)) throw DomainError("residual_cdf: t must be > 0");
    const auto& law = spec.law();
    const double c = spec.c();
    if (law.positive() && y <= 0.0) return 0.0;
    return (law.cdf(t, y) - c * law.cdf(spec.clock().a(t), y)) / (1.0 - c);
}

/// Call price of h_t in closed form from the law's own calls.
inline double residual_call(const FakeSpec& spec, double t, double k) {
    const auto& law = spec.law();
    if (t == 0.0) return std::max(law.x0() - k, 0.0);
    const double c = spec.c();
    return (law.call(t, k) - c * law.call(spec.clock().a(t), k)) / (1.0 - c);
}

/// Call price of h_t by adaptive quadrature of the residual density.
inline double residual_call_quadrature(const FakeSpec& spec, double t, double k, const QuadratureOptions& opt = {}) {
    const auto& law = spec.law();
    if (t == 0.0) return std::max(law.x0() - k, 0.0);
    const ClockSlice s = clock_slice(spec, t);
    const double c = spec.c();
    auto h = [&](double z) { return (law.density(t, z) - c * law.density(s.a, z)) / (1.0 - c); };
    return call_from_density(h, k, law.x0(), law.window(t), opt);
}

/// Out-of-the-money leg of h_t at strike k (put below x0, call above) by quadrature.
inline double residual_otm_quadrature(const FakeSpec& spec, double t, double k, const QuadratureOptions& opt = {}) {
    const auto& law = spec.law();
    if (!(t > 0.0)) throw DomainError("residual_otm_quadrature: t must be > 0");
    const double a = spec.clock().a(t);
    const double c = spec.c();
    auto h = [&](double z) { return (law.density(t, z) - c * law.density(a, z)) / (1.0 - c); };
    return otm_from_density(h, k, law.x0(), law.window(t), opt);
}

/// eta(t,y)^2 / sigma(y)^2 = (1 - c a_dot r) / (1 - c r), r = f_{a(t)}(y) / f_t(y).
inline double eta2_factor(const FakeSpec& spec, const ClockSlice& s, double y) {
    const double c = spec.c();
    const double r = slowed_density_ratio(spec, s, y);
    return (1.0 - c * s.a_dot * r) / (1.0 - c * r);
}

/// The two sides of 1 <= eta^2/sigma^2 < f_t/(f_t - c f_a) <= L^2, each minus one,
/// so that the strict middle inequality stays resolvable in the tails where r -> 0.
struct EtaBounds {
    double eta_excess;   // eta^2/sigma^2 - 1 = c r (1 - a_dot) / (1 - c r)
    double upper_excess; // f_t/(f_t - c f_a) - 1 = c r / (1 - c r)
    double l2_excess;    // L^2 - 1 = c / (K - c)
};

inline EtaBounds eta_bounds(const FakeSpec& spec, const ClockSlice& s, double y) {
    const double c = spec.c();
    const double r = slowed_density_ratio(spec, s, y);
    const double denom = 1.0 - c * r;
    return {c * r * (1.0 - s.a_dot) / denom, c * r / denom, c / (spec.K() - c)};
}

/// Local volatility of the Dupire diffusion whose marginals are h_t.
inline double local_vol_eta(const FakeSpec& spec, double t, double y) {
    if (!(t > 0.0)) throw DomainError("local_vol_eta: t must be > 0");
    if (!spec.law().contains(y)) throw DomainError("local_vol_eta: y outside the state interval");
    const ClockSlice s = clock_slice(spec, t);
    return spec.law().sigma(y) * std::sqrt(eta2_factor(spec, s, y));
}

/// d/dt E[(H_t - x)^+] = sigma(x)^2/2 (f_t(x) - c a_dot(t) f_{a(t)}(x)) / (1 - c),
/// with the factor 1/2 that the local-time identity carries.
inline double convex_order_rate(const FakeSpec& spec, double t, double x) {
    const ClockSlice s = clock_slice(spec, t);
    const auto& law = spec.law();
    const double sg = law.sigma(x);
    const double c = spec.c();
    return 0.5 * sg * sg * (law.density(t, x) - c * s.a_dot * law.density(s.a, x)) / (1.0 - c);
}

/// Width of the admissible band for real-line call surfaces:
/// J(T) = E[(X_{L^2 T} - x0)^+] / (1 - c).
inline double call_band_width(const FakeSpec& spec, double T) {
    const auto& law = spec.law();
    return law.call(spec.L2() * T, law.x0()) / (1.0 - spec.c());
}

} // namespace fakediff
