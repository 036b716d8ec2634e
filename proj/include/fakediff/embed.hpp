#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "fakediff/error.hpp"
#include "fakediff/laws.hpp"
#include "fakediff/normal.hpp"
#include "fakediff/parallel.hpp"
#include "fakediff/rng.hpp"
#include "fakediff/roots.hpp"

namespace fakediff {

/// b_t(x) = E[P_t | P_t >= x] for the unit-mean lognormal, Phi(d+)/Phi(d-) with
/// d+- = -ln x / sqrt t +- sqrt t / 2. Once Phi(d-) underflows the quotient is
/// taken as x R(u)/R(v) with the Mills ratio R, u = -d+, v = -d-.
inline double barycentre_lognormal(double t, double x) {
    if (!(t > 0.0)) throw DomainError("barycentre: t must be > 0");
    if (!(x > 0.0)) throw DomainError("barycentre: x must be > 0");
    const double st = std::sqrt(t);
    const double d_minus = -std::log(x) / st - 0.5 * st;
    const double d_plus = d_minus + st;
    const double tail = norm_cdf(d_minus);
    if (tail >= 1e-300) return norm_cdf(d_plus) / tail;
    return x * mills_ratio(-d_plus) / mills_ratio(-d_minus);
}

/// The same barycentre by quadrature of the lognormal density over [x, upper window edge].
inline double barycentre_lognormal_quadrature(double t, double x, const QuadratureOptions& opt = {}) {
    if (!(x > 0.0)) throw DomainError("barycentre: x must be > 0");
    const ExponentialBMLaw law;
    const IntegrationWindow w = law.window(t);
    const IntegrationWindow tail{std::max(std::log(x), w.lo), w.hi, true};
    if (!(tail.hi > tail.lo)) throw DomainError("barycentre: x beyond the quadrature window");
    auto f = [&](double z) { return law.density(t, z); };
    const double mass = expect(f, [](double) { return 1.0; }, tail, opt);
    const double first = expect(f, [](double z) { return z; }, tail, opt);
    return first / mass;
}

/// A family of barycentre curves (t, x) -> b_t(x), each increasing in x with b -> mean as x -> 0.
using BarycentreFamily = std::function<double(double, double)>;

inline BarycentreFamily lognormal_barycentres() { return barycentre_lognormal; }

/// Inverse of x -> b_t(x): the level below which the Azema-Yor rule stops once the
/// running maximum is m. Returns 0 when m does not exceed the mean (never stop).
class BarycentreInverse {
public:
    BarycentreInverse(BarycentreFamily family, double t, double mean = 1.0)
        : family_(std::move(family)), t_(t), mean_(mean) {}

    /// Warm start: `hint` is a previous root for a smaller m (or 0).
    double operator()(double m, double hint = 0.0) const {
        if (!(m > mean_ * (1.0 + 1e-12))) return 0.0;
        auto g = [&](double u) { return family_(t_, std::exp(u)) - m; };
        // b_t(x) >= x puts the root below ln m.
        double hi = std::log(m);
        double lo;
        if (hint > 0.0 && std::log(hint) < hi) {
            lo = std::log(hint);
            double step = 0.05;
            // Narrow the upper side for a fast solve; hint is below the root.
            while (lo + step < hi && g(lo + step) < 0.0) {
                lo += step;
                step *= 2.0;
            }
            hi = std::min(hi, lo + step);
            if (!(g(lo) < 0.0)) return std::exp(lo);
        } else {
            lo = hi - 1.0;
            double step = 1.0;
            while (g(lo) >= 0.0) {
                step *= 2.0;
                lo -= step;
                if (lo < -700.0) return 0.0;
            }
        }
        if (g(hi) <= 0.0) return std::exp(hi);
        return std::exp(solve_bracketed(g, lo, hi, 0.0, 1e-11));
    }

    double t() const { return t_; }

private:
    BarycentreFamily family_;
    double t_;
    double mean_;
};

struct EmbedOptions {
    double bm_step = 1e-4;
    std::uint64_t max_steps = 10'000'000;
    /// Throw SimulationError when a path exhausts max_steps; otherwise flag it.
    bool throw_on_exhaustion = true;
    std::size_t batch = 16;
    /// Replaces the lognormal barycentres; a negative-control hook.
    BarycentreFamily family;
};

/// B_{tau_t} at report times t_j, one Brownian path per sample. tau_j is the first
/// step with M >= b_{t_j}(B), found independently for each j on the same path, so
/// nesting of the stopping domains can be audited through stop_index.
struct EmbeddedProcess {
    std::vector<double> report_times;
    std::size_t n_paths = 0;
    std::vector<double> values;            // n_paths x report_times.size()
    std::vector<std::uint64_t> stop_index; // Brownian step at which each report time stopped
    std::vector<std::uint8_t> exhausted;   // per path
    double bm_step = 0.0;
    std::uint64_t seed = 0;

    std::size_t n_times() const { return report_times.size(); }
    double value(std::size_t p, std::size_t j) const { return values[p * n_times() + j]; }
    std::uint64_t stop(std::size_t p, std::size_t j) const { return stop_index[p * n_times() + j]; }

    std::vector<double> column(std::size_t j) const {
        std::vector<double> out;
        out.reserve(n_paths);
        for (std::size_t p = 0; p < n_paths; ++p) {
            if (!exhausted[p]) out.push_back(value(p, j));
        }
        return out;
    }

    std::size_t n_exhausted() const {
        return static_cast<std::size_t>(std::count(exhausted.begin(), exhausted.end(), std::uint8_t{1}));
    }

    /// Paths whose stopping steps fail to be non-decreasing across report times.
    std::size_t monotonicity_violations() const {
        std::size_t bad = 0;
        for (std::size_t p = 0; p < n_paths; ++p) {
            for (std::size_t j = 1; j < n_times(); ++j) {
                if (stop(p, j) < stop(p, j - 1)) {
                    ++bad;
                    break;
                }
            }
        }
        return bad;
    }
};

/// Azema-Yor / Madan-Yor fake exponential Brownian motion evaluated on a report grid.
/// Brownian motion starts at 1 and is stepped with Gaussian increments of variance bm_step.
inline EmbeddedProcess madan_yor_paths(std::span<const double> report_times, std::size_t n_paths,
                                       const RNGConfig& rng, const EmbedOptions& opt = {}) {
    if (report_times.empty()) throw DomainError("madan_yor_paths: empty report grid");
    for (std::size_t j = 0; j < report_times.size(); ++j) {
        if (!(report_times[j] > 0.0) || (j > 0 && !(report_times[j] > report_times[j - 1])))
            throw DomainError("madan_yor_paths: report times must be positive and increasing");
    }
    if (n_paths == 0) throw DomainError("madan_yor_paths: n_paths must be positive");
    if (!(opt.bm_step > 0.0)) throw DomainError("madan_yor_paths: bm_step must be > 0");

    const std::size_t nt = report_times.size();
    EmbeddedProcess out;
    out.report_times.assign(report_times.begin(), report_times.end());
    out.n_paths = n_paths;
    out.values.assign(n_paths * nt, 0.0);
    out.stop_index.assign(n_paths * nt, 0);
    out.exhausted.assign(n_paths, 0);
    out.bm_step = opt.bm_step;
    out.seed = rng.seed;

    const BarycentreFamily family = opt.family ? opt.family : lognormal_barycentres();
    std::vector<BarycentreInverse> inverses;
    inverses.reserve(nt);
    for (double t : report_times) inverses.emplace_back(family, t);
    const double sd = std::sqrt(opt.bm_step);

    parallel_batches(n_paths, rng.threads, opt.batch, [&](std::size_t b, std::size_t end) {
        std::vector<double> level(nt);
        std::vector<std::uint8_t> done(nt);
        for (std::size_t p = b; p < end; ++p) {
            Engine eng = make_engine(rng.seed, Stream::embed, p);
            StandardNormal normal;
            double x = 1.0;
            double m = 1.0;
            std::fill(level.begin(), level.end(), 0.0);
            std::fill(done.begin(), done.end(), 0);
            std::size_t remaining = nt;
            std::uint64_t step = 0;
            for (;;) {
                for (std::size_t j = 0; j < nt; ++j) {
                    if (!done[j] && x <= level[j]) {
                        done[j] = 1;
                        out.values[p * nt + j] = x;
                        out.stop_index[p * nt + j] = step;
                        --remaining;
                    }
                }
                if (remaining == 0) break;
                if (step >= opt.max_steps) {
                    if (opt.throw_on_exhaustion)
                        throw SimulationError("madan_yor_paths: path " + std::to_string(p) +
                                              " exceeded the step budget");
                    out.exhausted[p] = 1;
                    for (std::size_t j = 0; j < nt; ++j) {
                        if (!done[j]) {
                            out.values[p * nt + j] = x;
                            out.stop_index[p * nt + j] = step;
                        }
                    }
                    break;
                }
                x += sd * normal(eng);
                ++step;
                if (x > m) {
                    m = x;
                    for (std::size_t j = 0; j < nt; ++j) {
                        if (!done[j]) level[j] = inverses[j](m, level[j]);
                    }
                }
            }
        }
    });
    return out;
}

struct MrlOrderResult {
    bool pass = true;
    double worst = std::numeric_limits<double>::infinity(); // min over grid of b_{t+}(x) - b_t(x)
    double t = 0.0;
    double x = 0.0;
};

/// Residual-mean-life order: b_t(x) non-decreasing in t at every grid x.
inline MrlOrderResult check_mrl_order(std::span<const double> t_grid, std::span<const double> x_grid,
                                      const BarycentreFamily& family = barycentre_lognormal) {
    MrlOrderResult r;
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        for (double x : x_grid) {
            const double d = family(t_grid[i], x) - family(t_grid[i - 1], x);
            if (d < r.worst) r = {r.pass, d, t_grid[i - 1], x};
            if (d < 0.0) r.pass = false;
        }
    }
    if (t_grid.size() < 2) r.worst = 0.0;
    return r;
}

} // namespace fakediff
