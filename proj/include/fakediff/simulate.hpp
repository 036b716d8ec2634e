#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fakediff/error.hpp"
#include "fakediff/laws.hpp"
#include "fakediff/mixture.hpp"
#include "fakediff/parallel.hpp"
#include "fakediff/rng.hpp"

namespace fakediff {

/// Uniform grid t_i = i T / n_steps. Paths are stepped on every node but only
/// every `record_stride`-th node is stored (the last node always is).
class PathGrid {
public:
    PathGrid(double T, std::size_t n_steps, std::size_t record_stride = 1)
        : T_(T), n_steps_(n_steps), stride_(record_stride) {
        if (!(T > 0.0)) throw DomainError("PathGrid: horizon must be > 0");
        if (n_steps == 0) throw DomainError("PathGrid: n_steps must be positive");
        if (record_stride == 0 || n_steps % record_stride != 0)
            throw DomainError("PathGrid: record stride must divide n_steps");
    }

    double T() const { return T_; }
    std::size_t n_steps() const { return n_steps_; }
    std::size_t stride() const { return stride_; }
    double dt() const { return T_ / static_cast<double>(n_steps_); }
    double time(std::size_t i) const {
        return i == n_steps_ ? T_ : T_ * static_cast<double>(i) / static_cast<double>(n_steps_);
    }

    std::size_t n_records() const { return n_steps_ / stride_ + 1; }
    double record_time(std::size_t j) const { return time(j * stride_); }

    /// Index of the stored node closest to t.
    std::size_t nearest_record(double t) const {
        const double j = std::round(t / (dt() * static_cast<double>(stride_)));
        if (j <= 0.0) return 0;
        return std::min(static_cast<std::size_t>(j), n_records() - 1);
    }

private:
    double T_;
    std::size_t n_steps_;
    std::size_t stride_;
};

enum class Component : std::uint8_t { x_exact, g, h };
enum class Scheme : std::uint8_t { exact, log_euler, euler };

inline std::string_view to_string(Component c) {
    switch (c) {
    case Component::x_exact: return "X";
    case Component::g: return "G";
    case Component::h: return "H";
    }
    return "?";
}

inline std::string_view to_string(Scheme s) {
    switch (s) {
    case Scheme::exact: return "exact";
    case Scheme::log_euler: return "log-euler";
    case Scheme::euler: return "euler";
    }
    return "?";
}

struct PathEnsemble {
    PathGrid grid;
    std::size_t n_paths = 0;
    std::vector<double> values; // path-major, n_paths x grid.n_records()
    std::vector<Component> component;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::exact;

    std::span<const double> path(std::size_t p) const {
        return {values.data() + p * grid.n_records(), grid.n_records()};
    }
    double value(std::size_t p, std::size_t j) const { return values[p * grid.n_records() + j]; }

    std::vector<double> column(std::size_t j) const {
        std::vector<double> out(n_paths);
        for (std::size_t p = 0; p < n_paths; ++p) out[p] = value(p, j);
        return out;
    }

    std::size_t count(Component c) const {
        std::size_t n = 0;
        for (auto x : component) n += (x == c);
        return n;
    }
};

struct SimulationOptions {
    /// Multiplies eta in the H scheme. 1 in production; other values are a
    /// negative-control hook for the verification suite.
    double eta_scale = 1.0;
    /// Abort when |ln H| (positive laws) or |H - x0| / sqrt(L^2 T) exceeds this.
    double explosion_bound = 50.0;
    std::size_t batch = 64;
};

namespace detail {

inline PathEnsemble make_ensemble(const PathGrid& grid, std::size_t n_paths, const RNGConfig& rng, Scheme scheme) {
    if (n_paths == 0) throw DomainError("simulation: n_paths must be positive");
    PathEnsemble e{grid, n_paths, {}, {}, rng.seed, scheme};
    e.values.assign(n_paths * grid.n_records(), 0.0);
    e.component.assign(n_paths, Component::x_exact);
    return e;
}

/// Exact stepping with per-step variance increments dv[i] (time, or warped time).
inline void exact_path(bool positive, double x0, std::span<const double> dv, std::size_t stride, Engine& eng,
                       double* out) {
    StandardNormal normal;
    out[0] = x0;
    if (positive) {
        double lx = std::log(x0);
        for (std::size_t i = 0; i < dv.size(); ++i) {
            lx += std::sqrt(dv[i]) * normal(eng) - 0.5 * dv[i];
            if ((i + 1) % stride == 0) out[(i + 1) / stride] = std::exp(lx);
        }
    } else {
        double x = x0;
        for (std::size_t i = 0; i < dv.size(); ++i) {
            x += std::sqrt(dv[i]) * normal(eng);
            if ((i + 1) % stride == 0) out[(i + 1) / stride] = x;
        }
    }
}

/// Per-step data of the H scheme: eta^2/sigma^2 = scale^2 (1 - c a_dot r) / (1 - c r)
/// with r = exp(offset - curvature q^2) frozen at the step's left endpoint.
struct HStep {
    DensityRatioCoefficients ratio;
    double a_dot;
};

struct HPlan {
    bool positive;
    double x0;
    double c;
    double dt;
    double scale2;
    double bound;
    std::size_t stride;
    std::vector<HStep> steps;
};

inline HPlan make_h_plan(const FakeSpec& spec, const PathGrid& grid, const SimulationOptions& opt) {
    const auto& law = spec.law();
    HPlan plan{law.positive(), law.x0(), spec.c(), grid.dt(), opt.eta_scale * opt.eta_scale,
               law.positive() ? opt.explosion_bound : opt.explosion_bound * std::sqrt(spec.L2() * grid.T()),
               grid.stride(), {}};
    plan.steps.reserve(grid.n_steps());
    for (std::size_t i = 0; i < grid.n_steps(); ++i) {
        // eta is undefined at t = 0; the first step uses the first positive grid time.
        const double t = i == 0 ? grid.time(1) : grid.time(i);
        const ClockSlice s = clock_slice(spec, t);
        plan.steps.push_back({law.ratio_coefficients(s.a, s.t), s.a_dot});
    }
    return plan;
}

inline void h_path(const HPlan& plan, Engine& eng, double* out) {
    StandardNormal normal;
    out[0] = plan.x0;
    double q = plan.positive ? std::log(plan.x0) : plan.x0;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const HStep& st = plan.steps[i];
        const double r = std::exp(st.ratio.log_ratio_at(q));
        const double f = plan.scale2 * (1.0 - plan.c * st.a_dot * r) / (1.0 - plan.c * r);
        const double z = normal(eng);
        if (plan.positive) {
            q += -0.5 * f * plan.dt + std::sqrt(f * plan.dt) * z;
            if (!(std::abs(q) <= plan.bound)) throw SimulationError("H scheme exploded: |ln H| > bound");
        } else {
            q += std::sqrt(f * plan.dt) * z;
            if (!(std::abs(q - plan.x0) <= plan.bound)) throw SimulationError("H scheme exploded");
        }
        if ((i + 1) % plan.stride == 0) out[(i + 1) / plan.stride] = plan.positive ? std::exp(q) : q;
    }
}

inline std::vector<double> time_increments(const PathGrid& grid) {
    std::vector<double> dv(grid.n_steps());
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = grid.time(i + 1) - grid.time(i);
    return dv;
}

inline std::vector<double> warped_increments(const FakeSpec& spec, const PathGrid& grid) {
    std::vector<double> dv(grid.n_steps());
    double prev = 0.0;
    for (std::size_t i = 0; i < dv.size(); ++i) {
        const double next = spec.clock().a(grid.time(i + 1));
        dv[i] = next - prev;
        prev = next;
    }
    return dv;
}

/// Z^c = 1 with probability c, from the path's dedicated Bernoulli substream.
inline bool mixing_coin(std::uint64_t seed, std::size_t path, double c) {
    Engine eng = make_engine(seed, Stream::bernoulli, path);
    const double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;
    return u < c;
}

} // namespace detail

/// Exact-in-law paths of X itself (Brownian increments, or exact lognormal steps).
inline PathEnsemble sample_x_exact(const DiffusionLaw& law, const PathGrid& grid, std::size_t n_paths,
                                   const RNGConfig& rng, std::size_t batch = 64) {
    auto e = detail::make_ensemble(grid, n_paths, rng, Scheme::exact);
    const auto dv = detail::time_increments(grid);
    const std::size_t nr = grid.n_records();
    parallel_batches(n_paths, rng.threads, batch, [&](std::size_t b, std::size_t end) {
        for (std::size_t p = b; p < end; ++p) {
            Engine eng = make_engine(rng.seed, Stream::path, p);
            detail::exact_path(law.positive(), law.x0(), dv, grid.stride(), eng, e.values.data() + p * nr);
        }
    });
    return e;
}

/// G_t = X_{a(t)}: exact paths on the warped grid a(t_i), reported at t_i.
inline PathEnsemble sample_g(const FakeSpec& spec, const PathGrid& grid, std::size_t n_paths, const RNGConfig& rng,
                             std::size_t batch = 64) {
    auto e = detail::make_ensemble(grid, n_paths, rng, Scheme::exact);
    std::fill(e.component.begin(), e.component.end(), Component::g);
    const auto dv = detail::warped_increments(spec, grid);
    const auto& law = spec.law();
    const std::size_t nr = grid.n_records();
    parallel_batches(n_paths, rng.threads, batch, [&](std::size_t b, std::size_t end) {
        for (std::size_t p = b; p < end; ++p) {
            Engine eng = make_engine(rng.seed, Stream::path, p);
            detail::exact_path(law.positive(), law.x0(), dv, grid.stride(), eng, e.values.data() + p * nr);
        }
    });
    return e;
}

/// The Dupire diffusion dH = eta(t, H) dB: log-Euler for positive laws, Euler otherwise,
/// eta frozen at the left endpoint of each step.
inline PathEnsemble sample_h(const FakeSpec& spec, const PathGrid& grid, std::size_t n_paths, const RNGConfig& rng,
                             const SimulationOptions& opt = {}) {
    auto e = detail::make_ensemble(grid, n_paths, rng, spec.law().positive() ? Scheme::log_euler : Scheme::euler);
    std::fill(e.component.begin(), e.component.end(), Component::h);
    const auto plan = detail::make_h_plan(spec, grid, opt);
    const std::size_t nr = grid.n_records();
    parallel_batches(n_paths, rng.threads, opt.batch, [&](std::size_t b, std::size_t end) {
        for (std::size_t p = b; p < end; ++p) {
            Engine eng = make_engine(rng.seed, Stream::path, p);
            detail::h_path(plan, eng, e.values.data() + p * nr);
        }
    });
    return e;
}

/// The fake process: per path a coin Z^c ~ Bernoulli(c) drawn at time 0 selects a
/// G-path (Z^c = 1) or an H-path (Z^c = 0).
inline PathEnsemble sample_fake(const FakeSpec& spec, const PathGrid& grid, std::size_t n_paths, const RNGConfig& rng,
                                const SimulationOptions& opt = {}) {
    auto e = detail::make_ensemble(grid, n_paths, rng, spec.law().positive() ? Scheme::log_euler : Scheme::euler);
    const auto plan = detail::make_h_plan(spec, grid, opt);
    const auto dv = detail::warped_increments(spec, grid);
    const auto& law = spec.law();
    const std::size_t nr = grid.n_records();
    parallel_batches(n_paths, rng.threads, opt.batch, [&](std::size_t b, std::size_t end) {
        for (std::size_t p = b; p < end; ++p) {
            Engine eng = make_engine(rng.seed, Stream::path, p);
            double* out = e.values.data() + p * nr;
            if (detail::mixing_coin(rng.seed, p, spec.c())) {
                e.component[p] = Component::g;
                detail::exact_path(law.positive(), law.x0(), dv, grid.stride(), eng, out);
            } else {
                e.component[p] = Component::h;
                detail::h_path(plan, eng, out);
            }
        }
    });
    return e;
}

/// Per-path sum of squared log increments over the stored nodes.
inline std::vector<double> realized_log_qv(const PathEnsemble& e) {
    const std::size_t nr = e.grid.n_records();
    std::vector<double> qv(e.n_paths, 0.0);
    for (std::size_t p = 0; p < e.n_paths; ++p) {
        const auto path = e.path(p);
        if (!(path[0] > 0.0)) throw DomainError("realized_log_qv: nonpositive value");
        double prev = std::log(path[0]);
        double acc = 0.0;
        for (std::size_t j = 1; j < nr; ++j) {
            if (!(path[j] > 0.0)) throw DomainError("realized_log_qv: nonpositive value");
            const double cur = std::log(path[j]);
            acc += (cur - prev) * (cur - prev);
            prev = cur;
        }
        qv[p] = acc;
    }
    return qv;
}

/// Per-path sum of squared increments; the real-line counterpart of realized_log_qv.
inline std::vector<double> realized_qv(const PathEnsemble& e) {
    const std::size_t nr = e.grid.n_records();
    std::vector<double> qv(e.n_paths, 0.0);
    for (std::size_t p = 0; p < e.n_paths; ++p) {
        const auto path = e.path(p);
        double acc = 0.0;
        for (std::size_t j = 1; j < nr; ++j) acc += (path[j] - path[j - 1]) * (path[j] - path[j - 1]);
        qv[p] = acc;
    }
    return qv;
}

/// The quadratic-variation statistic natural to the law: log-QV for positive laws.
inline std::vector<double> realized_qv_for(const DiffusionLaw& law, const PathEnsemble& e) {
    return law.positive() ? realized_log_qv(e) : realized_qv(e);
}

} // namespace fakediff
