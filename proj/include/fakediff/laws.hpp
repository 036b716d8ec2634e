#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <variant>

#include "fakediff/error.hpp"
#include "fakediff/normal.hpp"
#include "fakediff/quadrature.hpp"

namespace fakediff {

// ---------------------------------------------------------------------------
// Closed-form marginals
// ---------------------------------------------------------------------------

/// Density of P_t for dP/P = dB, P_0 = 1:
/// (2 pi)^{-1/2} e^{-t/8} t^{-1/2} x^{-3/2} e^{-(ln x)^2 / 2t}.
inline double lognormal_log_density(double t, double x) {
    if (!(t > 0.0)) throw DomainError("lognormal_density: t must be > 0");
    if (!(x > 0.0)) throw DomainError("lognormal_density: x must be > 0");
    const double lx = std::log(x);
    return std::log(inv_sqrt_2pi) - t / 8.0 - 0.5 * std::log(t) - lx * lx / (2.0 * t) - 1.5 * lx;
}

inline double lognormal_density(double t, double x) { return std::exp(lognormal_log_density(t, x)); }

inline double lognormal_cdf(double t, double x) {
    if (!(t > 0.0)) throw DomainError("lognormal_cdf: t must be > 0");
    if (x <= 0.0) return 0.0;
    const double st = std::sqrt(t);
    return norm_cdf((std::log(x) + 0.5 * t) / st);
}

inline double gaussian_log_density(double t, double y) {
    if (!(t > 0.0)) throw DomainError("gaussian_density: t must be > 0");
    return std::log(inv_sqrt_2pi) - 0.5 * std::log(t) - y * y / (2.0 * t);
}

inline double gaussian_density(double t, double y) {
    if (!(t > 0.0)) throw DomainError("gaussian_density: t must be > 0");
    return inv_sqrt_2pi / std::sqrt(t) * std::exp(-y * y / (2.0 * t));
}

inline double gaussian_cdf(double t, double y) {
    if (!(t > 0.0)) throw DomainError("gaussian_cdf: t must be > 0");
    return norm_cdf(y / std::sqrt(t));
}

/// Black-Scholes call on the unit-volatility, unit-spot martingale:
/// Phi(d+) - k Phi(d-), d+- = -ln k / sqrt t +- sqrt t / 2.
inline double bs_call(double t, double k) {
    if (!(k > 0.0)) throw DomainError("bs_call: strike must be > 0");
    if (t < 0.0) throw DomainError("bs_call: t must be >= 0");
    if (t == 0.0) return std::max(1.0 - k, 0.0);
    const double st = std::sqrt(t);
    const double lk = std::log(k);
    const double d_plus = -lk / st + 0.5 * st;
    const double d_minus = d_plus - st;
    // Put-call parity on the in-the-money side keeps the small leg accurate.
    if (k < 1.0) return 1.0 - k + (k * norm_cdf(-d_minus) - norm_cdf(-d_plus));
    return norm_cdf(d_plus) - k * norm_cdf(d_minus);
}

/// E[(W_t - k)^+] for W a standard Brownian motion started at 0.
inline double gaussian_call(double t, double k) {
    if (t < 0.0) throw DomainError("gaussian_call: t must be >= 0");
    if (t == 0.0) return std::max(-k, 0.0);
    const double st = std::sqrt(t);
    const double z = k / st;
    if (k < 0.0) return -k + (st * norm_pdf(z) + k * norm_cdf(z)); // parity: -k + put
    return st * norm_pdf(z) - k * norm_cdf(-z);
}

// ---------------------------------------------------------------------------
// Diffusion laws
// ---------------------------------------------------------------------------

enum class LawKind { brownian, exponential_brownian };

/// ln f_s(y) - ln f_t(y) = offset - curvature * q^2 with q = ln y on a log
/// coordinate, q = y otherwise. Both shipped laws have this Gaussian-in-q form.
struct DensityRatioCoefficients {
    double offset;
    double curvature;
    bool log_coordinate;

    double log_ratio_at(double q) const { return offset - curvature * q * q; }
};

/// Quadrature window for the time-t marginal. On a log axis the bounds are in ln x.
struct IntegrationWindow {
    double lo;
    double hi;
    bool log_axis;
};

struct BrownianLaw {
    static constexpr LawKind kind = LawKind::brownian;
    static constexpr std::string_view name = "bm";

    double x0() const { return 0.0; }
    double lower() const { return -std::numeric_limits<double>::infinity(); }
    double upper() const { return std::numeric_limits<double>::infinity(); }
    double sigma(double) const { return 1.0; }
    double log_density(double t, double y) const { return gaussian_log_density(t, y); }
    double density(double t, double y) const { return gaussian_density(t, y); }
    double cdf(double t, double y) const { return gaussian_cdf(t, y); }
    double call(double t, double k) const { return gaussian_call(t, k); }

    DensityRatioCoefficients ratio_coefficients(double s, double t) const {
        if (!(s > 0.0) || !(t > 0.0)) throw DomainError("density ratio: times must be > 0");
        return {0.5 * std::log(t / s), 0.5 * (1.0 / s - 1.0 / t), false};
    }

    /// ln f_s(y) - ln f_t(y).
    double log_density_ratio(double s, double t, double y) const {
        return ratio_coefficients(s, t).log_ratio_at(y);
    }

    IntegrationWindow window(double t) const {
        const double w = 8.0 * std::sqrt(t);
        return {-w, w, false};
    }
};

struct ExponentialBMLaw {
    static constexpr LawKind kind = LawKind::exponential_brownian;
    static constexpr std::string_view name = "ebm";

    double x0() const { return 1.0; }
    double lower() const { return 0.0; }
    double upper() const { return std::numeric_limits<double>::infinity(); }
    double sigma(double y) const { return y; }
    double log_density(double t, double x) const { return lognormal_log_density(t, x); }
    double density(double t, double x) const { return lognormal_density(t, x); }
    double cdf(double t, double x) const { return lognormal_cdf(t, x); }
    double call(double t, double k) const { return bs_call(t, k); }

    DensityRatioCoefficients ratio_coefficients(double s, double t) const {
        if (!(s > 0.0) || !(t > 0.0)) throw DomainError("density ratio: times must be > 0");
        return {(t - s) / 8.0 + 0.5 * std::log(t / s), 0.5 * (1.0 / s - 1.0 / t), true};
    }

    double log_density_ratio(double s, double t, double x) const {
        if (!(x > 0.0)) throw DomainError("density ratio: x must be > 0");
        return ratio_coefficients(s, t).log_ratio_at(std::log(x));
    }

    // ln x in x0 * e^{+-8 sqrt t}, widened by the drift t/2 so both the law
    // and its size-biased version keep 8 standard deviations.
    IntegrationWindow window(double t) const {
        const double w = 8.0 * std::sqrt(t) + 0.5 * t;
        return {-w, w, true};
    }
};

/// A time-homogeneous martingale diffusion dX = sigma(X) dB with analytic marginals.
class DiffusionLaw {
    std::variant<BrownianLaw, ExponentialBMLaw> impl_;

    template <class F>
    decltype(auto) visit(F&& f) const {
        return std::visit(std::forward<F>(f), impl_);
    }

public:
    DiffusionLaw(BrownianLaw law) : impl_(law) {}
    DiffusionLaw(ExponentialBMLaw law) : impl_(law) {}

    static DiffusionLaw from_name(std::string_view name) {
        if (name == BrownianLaw::name) return BrownianLaw{};
        if (name == ExponentialBMLaw::name) return ExponentialBMLaw{};
        throw DomainError("unknown law '" + std::string(name) + "' (expected bm or ebm)");
    }

    LawKind kind() const {
        return std::visit([](const auto& l) { return l.kind; }, impl_);
    }
    std::string_view name() const {
        return std::visit([](const auto& l) { return l.name; }, impl_);
    }
    bool positive() const { return kind() == LawKind::exponential_brownian; }

    double x0() const { return visit([](const auto& l) { return l.x0(); }); }
    double lower() const { return visit([](const auto& l) { return l.lower(); }); }
    double upper() const { return visit([](const auto& l) { return l.upper(); }); }
    double sigma(double y) const { return visit([&](const auto& l) { return l.sigma(y); }); }
    double log_density(double t, double y) const {
        return visit([&](const auto& l) { return l.log_density(t, y); });
    }
    double density(double t, double y) const {
        return visit([&](const auto& l) { return l.density(t, y); });
    }
    double cdf(double t, double y) const { return visit([&](const auto& l) { return l.cdf(t, y); }); }

    /// E[(X_t - k)^+]; exactly (x0 - k)^+ at t = 0.
    double call(double t, double k) const {
        if (t == 0.0) return std::max(x0() - k, 0.0);
        return visit([&](const auto& l) { return l.call(t, k); });
    }
    double log_density_ratio(double s, double t, double y) const {
        return visit([&](const auto& l) { return l.log_density_ratio(s, t, y); });
    }
    DensityRatioCoefficients ratio_coefficients(double s, double t) const {
        return visit([&](const auto& l) { return l.ratio_coefficients(s, t); });
    }
    IntegrationWindow window(double t) const {
        if (!(t > 0.0)) throw DomainError("window: t must be > 0");
        return visit([&](const auto& l) { return l.window(t); });
    }
    bool contains(double y) const { return y > lower() && y < upper(); }

};

// ---------------------------------------------------------------------------
// Quadrature of densities
// ---------------------------------------------------------------------------

/// Integral of g(z) * density(z) over the window.
template <class Density, class G>
double expect(Density&& density, G&& g, const IntegrationWindow& w, const QuadratureOptions& opt = {}) {
    auto integrand = [&](double z) { return g(z) * density(z); };
    if (w.log_axis) return integrate_log_axis(integrand, w.lo, w.hi, opt);
    return integrate(integrand, w.lo, w.hi, opt);
}

/// Price of the out-of-the-money leg at strike k: the put E[(k - Z)^+] when
/// k < x0, the call E[(Z - k)^+] otherwise.
template <class Density>
double otm_from_density(Density&& density, double k, double x0, const IntegrationWindow& w,
                        const QuadratureOptions& opt = {}) {
    if (w.log_axis && !(k > 0.0)) return 0.0; // no mass at or below a nonpositive strike
    const double uk = w.log_axis ? std::log(k) : k;
    if (k < x0) {
        const double hi = std::min(uk, w.hi);
        if (!(hi > w.lo)) return 0.0;
        const IntegrationWindow leg{w.lo, hi, w.log_axis};
        return expect(density, [k](double z) { return k - z; }, leg, opt);
    }
    const double lo = std::max(uk, w.lo);
    if (!(w.hi > lo)) return 0.0;
    const IntegrationWindow leg{lo, w.hi, w.log_axis};
    return expect(density, [k](double z) { return z - k; }, leg, opt);
}

/// E[(Z - k)^+] for Z with the given density and mean x0. Strikes below x0 are
/// priced as x0 - k plus the put, so the quadrature only ever sees the small
/// out-of-the-money leg.
template <class Density>
double call_from_density(Density&& density, double k, double x0, const IntegrationWindow& w,
                         const QuadratureOptions& opt = {}) {
    const double otm = otm_from_density(density, k, x0, w, opt);
    return k < x0 ? x0 - k + otm : otm;
}

/// Call price of a law by quadrature of its own density.
inline double call_by_quadrature(const DiffusionLaw& law, double t, double k, const QuadratureOptions& opt = {}) {
    if (t == 0.0) return std::max(law.x0() - k, 0.0);
    return call_from_density([&](double z) { return law.density(t, z); }, k, law.x0(), law.window(t), opt);
}

/// int_0^T f_t(x) dt, substituting t = s^2 to absorb the t^{-1/2} singularity at x = x0.
inline double time_integrated_density(const DiffusionLaw& law, double T, double x,
                                      const QuadratureOptions& opt = {}) {
    if (T < 0.0) throw DomainError("time_integrated_density: T must be >= 0");
    if (T == 0.0) return 0.0;
    return integrate([&](double s) { return 2.0 * s * law.density(s * s, x); }, 0.0, std::sqrt(T), opt);
}

/// Right-hand side of the Carr-Jarrow / Klebaner identity:
/// E[(X_T - x)^+] = (x0 - x)^+ + sigma(x)^2 / 2 * int_0^T f_t(x) dt.
inline double call_via_local_time(const DiffusionLaw& law, double T, double x, const QuadratureOptions& opt = {}) {
    const double s = law.sigma(x);
    return std::max(law.x0() - x, 0.0) + 0.5 * s * s * time_integrated_density(law, T, x, opt);
}

} // namespace fakediff
