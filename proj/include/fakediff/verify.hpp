#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include "fakediff/embed.hpp"
#include "fakediff/grid.hpp"
#include "fakediff/mixture.hpp"
#include "fakediff/pde.hpp"
#include "fakediff/rng.hpp"
#include "fakediff/simulate.hpp"
#include "fakediff/stats.hpp"
#include "fakediff/timechange.hpp"

namespace fakediff {

enum class CheckStatus { pass, fail, warning };

inline std::string_view to_string(CheckStatus s) {
    switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::warning: return "warning";
    }
    return "?";
}

/// How the statistic is compared with the threshold for a pass.
enum class Comparison { less, less_equal, greater, greater_equal };

inline std::string_view to_string(Comparison c) {
    switch (c) {
    case Comparison::less: return "<";
    case Comparison::less_equal: return "<=";
    case Comparison::greater: return ">";
    case Comparison::greater_equal: return ">=";
    }
    return "?";
}

inline bool compare(double stat, Comparison c, double threshold) {
    switch (c) {
    case Comparison::less: return stat < threshold;
    case Comparison::less_equal: return stat <= threshold;
    case Comparison::greater: return stat > threshold;
    case Comparison::greater_equal: return stat >= threshold;
    }
    return false;
}

struct CheckResult {
    std::string name;
    double statistic = 0.0;
    double threshold = 0.0;
    Comparison comparison = Comparison::less_equal;
    CheckStatus status = CheckStatus::pass;
    std::string detail;

    bool passed() const { return status == CheckStatus::pass; }
};

/// Budgets, tolerances and the (alpha, n) pairs behind every statistical threshold.
struct VerificationConfig {
    RNGConfig rng;
    double T = 1.0;
    std::size_t n_paths = 50'000;
    std::size_t n_steps = 1000;
    std::vector<double> report_fractions{0.25, 0.5, 1.0}; // KS report times as fractions of T
    AuditGrid audit;
    PdeGrid pde;
    /// Multiply the step count by ceil(L^2/2) and the PDE nodes and Rannacher steps by sqrt(L^2/2).
    bool auto_scale = true;

    double mixture_rel_tol = 1e-14;
    double closed_form_tol = 1e-12; // relative
    double l2_bound_tol = 1e-12;    // relative; the non-strict eta <= L bound is attained at x0
    double clock_fd_tol = 1e-6;
    double mass_tol = 1e-8;
    double pde_tol = 1e-3;
    double surface_tol = 1e-10;

    double ks_alpha = 1e-6;   // marginal KS, compared at n = n_paths
    double mean_alpha = 1e-3; // family-wise level of the martingale-mean check over all grid times
    double mean_z = 3.0;      // per-time band at the few embedding report times
    double qv_alpha = 1e-6;   // two-sample QV witness must reject at this level
    double qv_fraction_alpha = 1e-6; // two-sided binomial band for the G fraction
    std::size_t min_paths = 1000; // below this, statistical checks only warn

    bool madan_yor = false;
    std::size_t embed_paths = 50'000;
    double bm_step = 1e-4;
    double embed_alpha = 1e-9;
    double barycentre_tol = 1e-8;
    BarycentreFamily barycentre_family; // empty: lognormal

    double eta_scale = 1.0; // negative-control hook passed to the H scheme
};

struct VerificationReport {
    std::vector<CheckResult> checks;
    nlohmann::json config;

    bool all_passed() const {
        return std::none_of(checks.begin(), checks.end(),
                            [](const CheckResult& c) { return c.status == CheckStatus::fail; });
    }
    std::size_t n_warnings() const {
        return static_cast<std::size_t>(std::count_if(
            checks.begin(), checks.end(), [](const CheckResult& c) { return c.status == CheckStatus::warning; }));
    }
    const CheckResult* find(std::string_view name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

inline nlohmann::json to_json(const CheckResult& c) {
    nlohmann::json j;
    j["check"] = c.name;
    j["statistic"] = std::isfinite(c.statistic) ? nlohmann::json(c.statistic) : nlohmann::json(nullptr);
    j["threshold"] = c.threshold;
    j["comparison"] = std::string(to_string(c.comparison));
    j["pass"] = c.status != CheckStatus::fail;
    j["status"] = std::string(to_string(c.status));
    if (!c.detail.empty()) j["detail"] = c.detail;
    return j;
}

inline nlohmann::json to_json(const VerificationReport& r) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) checks.push_back(to_json(c));
    return {{"config", r.config}, {"checks", checks}, {"pass", r.all_passed()}};
}

struct ScaledBudgets {
    std::size_t n_steps;
    std::size_t record_stride; // paths keep every record_stride-th node
    PdeGrid pde;
};

inline ScaledBudgets scaled_budgets(const FakeSpec& spec, const VerificationConfig& cfg) {
    ScaledBudgets b{cfg.n_steps, 1, cfg.pde};
    if (!cfg.auto_scale) return b;
    const double r = spec.L2() / 2.0;
    // Finer steps for the H scheme; the recorded grid and the QV partition stay at n_steps.
    b.record_stride = static_cast<std::size_t>(std::max(1.0, std::ceil(r - 1e-12)));
    b.n_steps *= b.record_stride;
    const double f = std::max(1.0, std::sqrt(r));
    b.pde.n_space = static_cast<std::size_t>(std::ceil(static_cast<double>(cfg.pde.n_space - 1) * f)) + 1;
    b.pde.n_time = static_cast<std::size_t>(std::ceil(static_cast<double>(cfg.pde.n_time) * f));
    // The diffusion number at the kink grows with f, so more implicit start-up steps are needed.
    b.pde.rannacher = static_cast<std::size_t>(std::ceil(static_cast<double>(cfg.pde.rannacher) * f));
    return b;
}

/// Collects checks; statistical ones degrade to warnings when power is insufficient.
class CheckList {
public:
    explicit CheckList(bool low_power) : low_power_(low_power) {}

    CheckResult& add(std::string name, double stat, Comparison cmp, double threshold, bool statistical = false,
                     std::string detail = {}) {
        CheckResult r{std::move(name), stat, threshold, cmp, CheckStatus::pass, std::move(detail)};
        if (!compare(stat, cmp, threshold)) r.status = CheckStatus::fail;
        if (statistical && low_power_) {
            r.status = CheckStatus::warning;
            if (!r.detail.empty()) r.detail += "; ";
            r.detail += "insufficient power: sample below the configured minimum";
        }
        checks_.push_back(std::move(r));
        return checks_.back();
    }

    std::vector<CheckResult> take() { return std::move(checks_); }

private:
    bool low_power_;
    std::vector<CheckResult> checks_;
};

/// Two-sided Bonferroni band: |z| above this at any of m times rejects at family-wise level alpha.
inline double bonferroni_z(double alpha, std::size_t m) {
    if (!(alpha > 0.0 && alpha < 1.0) || m == 0) throw DomainError("bonferroni_z: need alpha in (0,1) and m > 0");
    return boost::math::quantile(boost::math::complement(boost::math::normal(), alpha / (2.0 * static_cast<double>(m))));
}

namespace detail {

inline std::string time_label(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", t);
    return buf;
}

} // namespace detail

/// c f_a + (1 - c) h_t reproduces f_t: max relative error on the audit grid.
inline double mixture_identity_error(const FakeSpec& spec, const AuditGrid& grid) {
    const auto& law = spec.law();
    const double c = spec.c();
    double worst = 0.0;
    for (double t : grid.times) {
        const double a = spec.clock().a(t);
        for (double y : grid.states(law, t)) {
            const double ft = law.density(t, y);
            const double mix = c * law.density(a, y) + (1.0 - c) * residual_density(spec, t, y);
            worst = std::max(worst, std::abs(mix - ft) / ft);
        }
    }
    return worst;
}

struct EtaAudit {
    double min_eta_excess = std::numeric_limits<double>::infinity();   // eta^2/sigma^2 - 1, must be >= 0
    double min_strict_gap = std::numeric_limits<double>::infinity();   // upper - eta^2/sigma^2, must be > 0
    double max_l2_overshoot = -std::numeric_limits<double>::infinity(); // (upper - L^2) / L^2, must be <= 0
    double closed_form_error = 0.0;                                    // relative, at y = x0
};

inline EtaAudit audit_eta(const FakeSpec& spec, const AuditGrid& grid) {
    EtaAudit e;
    const auto& law = spec.law();
    const double c = spec.c();
    const double K = spec.K();
    for (double t : grid.times) {
        const ClockSlice s = clock_slice(spec, t);
        for (double y : grid.states(law, t)) {
            const EtaBounds b = eta_bounds(spec, s, y);
            e.min_eta_excess = std::min(e.min_eta_excess, b.eta_excess);
            e.min_strict_gap = std::min(e.min_strict_gap, b.upper_excess - b.eta_excess);
            e.max_l2_overshoot = std::max(e.max_l2_overshoot, (b.upper_excess - b.l2_excess) / spec.L2());
        }
        const double closed = (1.0 - c * s.a_dot / K) / (1.0 - c / K);
        e.closed_form_error = std::max(e.closed_form_error, std::abs(eta2_factor(spec, s, law.x0()) - closed) / closed);
    }
    return e;
}

struct ClockAudit {
    double identity_error = 0.0; // |psi(a) - K psi(t)| / (K psi(t)), or |a - K^2 t| for Brownian clocks
    double fd_error = 0.0;       // max |a_dot - central difference|
    double max_rate = 0.0;       // sup a_dot
    double min_increment = std::numeric_limits<double>::infinity();
    bool has_identity = true;
};

inline ClockAudit audit_clock(const TimeChange& tc, std::span<const double> times) {
    ClockAudit r;
    const double K = tc.K();
    double prev = 0.0;
    for (double t : times) {
        const double a = tc.a(t);
        switch (tc.kind()) {
        case ClockKind::exponential_brownian:
            r.identity_error = std::max(r.identity_error, std::abs(psi(a) - K * psi(t)) / (K * psi(t)));
            break;
        case ClockKind::brownian: r.identity_error = std::max(r.identity_error, std::abs(a - K * K * t)); break;
        case ClockKind::tabulated: r.has_identity = false; break;
        }
        const double d = 1e-5 * t;
        const double fd = (tc.a(t + d) - tc.a(t - d)) / (2.0 * d);
        r.fd_error = std::max(r.fd_error, std::abs(tc.a_dot(t) - fd));
        r.max_rate = std::max(r.max_rate, tc.a_dot(t));
        r.min_increment = std::min(r.min_increment, a - prev);
        prev = a;
    }
    return r;
}

struct ResidualMoments {
    double mass_error = 0.0;
    double mean_error = 0.0;
};

inline ResidualMoments audit_residual_moments(const FakeSpec& spec, std::span<const double> times) {
    ResidualMoments m;
    const auto& law = spec.law();
    const QuadratureOptions opt{1e-11, 25};
    for (double t : times) {
        auto h = [&](double y) { return residual_density(spec, t, y); };
        const auto w = law.window(t);
        m.mass_error = std::max(m.mass_error, std::abs(expect(h, [](double) { return 1.0; }, w, opt) - 1.0));
        m.mean_error = std::max(m.mean_error, std::abs(expect(h, [](double z) { return z; }, w, opt) - law.x0()));
    }
    return m;
}

struct ConvexOrderAudit {
    double min_integrand = std::numeric_limits<double>::infinity(); // min of 1 - c a_dot f_a/f_t
    double min_fd_rate = std::numeric_limits<double>::infinity();   // min of d/dt C_h by central differences
    double t = 0.0;
    double y = 0.0;
};

/// Positivity of f_t - c a_dot f_{a(t)} (as the ratio 1 - c a_dot r) and of a
/// central difference in t of the quadrature prices of h_t. The difference is
/// taken on the out-of-the-money leg, which has the same t-derivative as the call.
inline ConvexOrderAudit convex_order_audit(const FakeSpec& spec, const AuditGrid& grid, double rel_step = 1e-3) {
    ConvexOrderAudit a;
    const auto& law = spec.law();
    const double c = spec.c();
    const QuadratureOptions opt{1e-12, 30};
    for (double t : grid.times) {
        const ClockSlice s = clock_slice(spec, t);
        const double d = rel_step * t;
        for (double y : grid.states(law, t)) {
            a.min_integrand = std::min(a.min_integrand, 1.0 - c * s.a_dot * slowed_density_ratio(spec, s, y));
            const double rate =
                (residual_otm_quadrature(spec, t + d, y, opt) - residual_otm_quadrature(spec, t - d, y, opt)) / (2.0 * d);
            if (rate < a.min_fd_rate) {
                a.min_fd_rate = rate;
                a.t = t;
                a.y = y;
            }
        }
    }
    return a;
}

/// Max |C_pde - C_h| on interior nodes at the final time.
inline double dupire_quadrature_error(const CallSurface& s, const FakeSpec& spec) {
    const double T = s.times.back();
    return max_interior_error(s, s.n_times() - 1, [&](double k) { return residual_call_quadrature(spec, T, k); });
}

inline double surface_worst(const SurfaceAudit& a) {
    return std::max({a.initial_error, -a.min_convexity, -a.min_time_increment, a.bound_violation});
}

/// Checks on a Madan-Yor ensemble: KS and means at the report times, nesting, budget.
inline std::vector<CheckResult> madan_yor_checks(const EmbeddedProcess& e, const VerificationConfig& cfg) {
    CheckList list(e.n_paths < cfg.min_paths);
    for (std::size_t j = 0; j < e.n_times(); ++j) {
        const auto col = e.column(j);
        const double t = e.report_times[j];
        if (col.empty()) {
            list.add("embed_ks_t=" + detail::time_label(t), std::numeric_limits<double>::infinity(),
                     Comparison::less_equal, 0.0, false, "every path exhausted its step budget");
            continue;
        }
        const auto ks = ks_test(col, [t](double x) { return lognormal_cdf(t, x); });
        const double n = static_cast<double>(col.size());
        list.add("embed_ks_t=" + detail::time_label(t), ks.statistic, Comparison::less,
                 ks_critical_value(cfg.embed_alpha, n), true,
                 "alpha=" + detail::time_label(cfg.embed_alpha) + ", n=" + std::to_string(col.size()));
    }
    double worst_z = 0.0;
    for (std::size_t j = 0; j < e.n_times(); ++j) {
        const auto col = e.column(j);
        if (col.size() < 2) continue;
        const auto m = moments(col);
        worst_z = std::max(worst_z, std::abs(m.mean - 1.0) / m.std_error);
    }
    list.add("embed_mean", worst_z, Comparison::less_equal, cfg.mean_z, true);
    list.add("embed_stopping_monotone", static_cast<double>(e.monotonicity_violations()), Comparison::less_equal, 0.0);
    list.add("embed_budget_exhausted", static_cast<double>(e.n_exhausted()), Comparison::less_equal, 0.0);
    return list.take();
}

/// Closed-form vs quadrature barycentres and their t-monotonicity on the audit grid.
inline std::vector<CheckResult> barycentre_checks(const VerificationConfig& cfg) {
    CheckList list(false);
    const ExponentialBMLaw law;
    double worst = 0.0;
    for (double t : cfg.audit.times) {
        // +-4 sd keeps the tail mass well above the quadrature floor.
        AuditGrid g = cfg.audit;
        g.n_sd = 4.0;
        for (double x : g.states(DiffusionLaw(law), t)) {
            const double b = barycentre_lognormal(t, x);
            const double q = barycentre_lognormal_quadrature(t, x, {1e-12, 30});
            worst = std::max(worst, std::abs(b - q) / b);
        }
    }
    list.add("barycentre_closed_form", worst, Comparison::less_equal, cfg.barycentre_tol);
    const auto xs = logspace(1e-3, 1e3, 201);
    const BarycentreFamily family = cfg.barycentre_family ? cfg.barycentre_family : lognormal_barycentres();
    const auto mrl = check_mrl_order(cfg.audit.times, xs, family);
    list.add("barycentre_mrl_order", mrl.worst, Comparison::greater_equal, 0.0);
    return list.take();
}

inline nlohmann::json config_json(const FakeSpec& spec, const VerificationConfig& cfg, const ScaledBudgets& b) {
    return {
        {"law", std::string(spec.law().name())},
        {"K", spec.K()},
        {"c", spec.c()},
        {"L2", spec.L2()},
        {"T", cfg.T},
        {"seed", cfg.rng.seed},
        {"n_paths", cfg.n_paths},
        {"n_steps", b.n_steps},
        {"record_stride", b.record_stride},
        {"grids",
         {{"audit_times", cfg.audit.times.size()},
          {"audit_states", cfg.audit.n_states},
          {"audit_n_sd", cfg.audit.n_sd},
          {"pde_space", b.pde.n_space},
          {"pde_time", b.pde.n_time},
          {"pde_n_sd", b.pde.n_sd}}},
        {"thresholds",
         {{"ks_alpha", cfg.ks_alpha},
          {"mean_alpha", cfg.mean_alpha},
          {"mean_z", cfg.mean_z},
          {"qv_alpha", cfg.qv_alpha},
          {"qv_fraction_alpha", cfg.qv_fraction_alpha},
          {"min_paths", cfg.min_paths},
          {"embed_alpha", cfg.embed_alpha}}},
        {"eta_scale", cfg.eta_scale},
    };
}

/// Runs every enabled check; check failures are recorded, configuration errors thrown.
inline VerificationReport full_verification(const FakeSpec& spec, const VerificationConfig& cfg = {}) {
    if (!(cfg.T > 0.0)) throw ValidationError(ValidationCode::bad_config, "T must be > 0");
    if (cfg.n_paths < 2 || cfg.n_steps < 1) throw ValidationError(ValidationCode::bad_config, "need n_paths >= 2 and n_steps >= 1");
    if (cfg.report_fractions.empty()) throw ValidationError(ValidationCode::bad_config, "empty report grid");
    for (double f : cfg.report_fractions)
        if (!(f > 0.0 && f <= 1.0)) throw ValidationError(ValidationCode::bad_config, "report fractions must lie in (0,1]");

    const auto budgets = scaled_budgets(spec, cfg);
    const auto& law = spec.law();
    const double c = spec.c();
    VerificationReport report;
    report.config = config_json(spec, cfg, budgets);
    CheckList list(cfg.n_paths < cfg.min_paths);

    list.add("mixture_identity", mixture_identity_error(spec, cfg.audit), Comparison::less, cfg.mixture_rel_tol);

    const auto eta = audit_eta(spec, cfg.audit);
    list.add("eta_lower_bound", eta.min_eta_excess, Comparison::greater_equal, 0.0);
    list.add("eta_strict_upper_bound", eta.min_strict_gap, Comparison::greater, 0.0);
    list.add("eta_l2_bound", eta.max_l2_overshoot, Comparison::less_equal, cfg.l2_bound_tol);
    list.add("eta_closed_form_x0", eta.closed_form_error, Comparison::less_equal, cfg.closed_form_tol);

    const auto clk = audit_clock(spec.clock(), cfg.audit.times);
    if (clk.has_identity) list.add("clock_identity", clk.identity_error, Comparison::less_equal, cfg.closed_form_tol);
    list.add("clock_derivative_fd", clk.fd_error, Comparison::less_equal, cfg.clock_fd_tol);
    list.add("clock_rate_below_one", clk.max_rate, Comparison::less, 1.0);
    list.add("clock_increasing", clk.min_increment, Comparison::greater, 0.0);

    const auto mom = audit_residual_moments(spec, cfg.audit.times);
    list.add("h_mass", mom.mass_error, Comparison::less_equal, cfg.mass_tol);
    list.add("h_mean", mom.mean_error, Comparison::less_equal, cfg.mass_tol);

    const auto co = convex_order_audit(spec, cfg.audit);
    list.add("convex_order_integrand", co.min_integrand, Comparison::greater, 0.0);
    list.add("convex_order_fd", co.min_fd_rate, Comparison::greater, 0.0,
             false, "worst at t=" + detail::time_label(co.t) + ", y=" + detail::time_label(co.y));

    const auto surface = solve_dupire(spec, cfg.T, budgets.pde);
    list.add("dupire_surface_invariants", surface_worst(audit_surface(surface, spec)), Comparison::less_equal,
             cfg.surface_tol);
    list.add("dupire_vs_quadrature", dupire_quadrature_error(surface, spec), Comparison::less_equal, cfg.pde_tol);

    // Monte Carlo marginals of the fake process.
    const PathGrid grid(cfg.T, budgets.n_steps, budgets.record_stride);
    SimulationOptions sim;
    sim.eta_scale = cfg.eta_scale;
    const auto fake = sample_fake(spec, grid, cfg.n_paths, cfg.rng, sim);
    const double n = static_cast<double>(cfg.n_paths);
    for (double frac : cfg.report_fractions) {
        const std::size_t j = grid.nearest_record(frac * cfg.T);
        const double t = grid.record_time(j);
        const auto ks = ks_test(fake.column(j), [&](double y) { return law.cdf(t, y); });
        list.add("marginal_ks_t=" + detail::time_label(t), ks.statistic, Comparison::less,
                 ks_critical_value(cfg.ks_alpha, n), true,
                 "alpha=" + detail::time_label(cfg.ks_alpha) + ", n=" + std::to_string(cfg.n_paths));
    }
    double worst_z = 0.0;
    for (std::size_t j = 1; j < grid.n_records(); ++j) {
        const auto m = moments(fake.column(j));
        worst_z = std::max(worst_z, std::abs(m.mean - law.x0()) / m.std_error);
    }
    const std::size_t m_times = grid.n_records() - 1;
    list.add("martingale_mean", worst_z, Comparison::less_equal, bonferroni_z(cfg.mean_alpha, m_times), true,
             "family-wise alpha=" + detail::time_label(cfg.mean_alpha) + " over " + std::to_string(m_times) + " times");

    // Fakeness witness: QV of X~ against QV of X on an independent seed.
    const RNGConfig ref_rng{splitmix64(cfg.rng.seed ^ 0x9e3779b97f4a7c15ULL), cfg.rng.threads};
    const auto exact = sample_x_exact(law, grid, cfg.n_paths, ref_rng);
    const auto qv_fake = realized_qv_for(law, fake);
    const auto qv_exact = realized_qv_for(law, exact);
    const auto two = ks_two_sample(qv_fake, qv_exact);
    list.add("qv_two_sample_ks", two.statistic, Comparison::greater, ks_critical_value(cfg.qv_alpha, n / 2.0), true,
             "reject at alpha=" + detail::time_label(cfg.qv_alpha) + ", n_eff=" + std::to_string(cfg.n_paths / 2));
    const double cut = 0.5 * (spec.clock().a(cfg.T) + cfg.T);
    const double below =
        static_cast<double>(std::count_if(qv_fake.begin(), qv_fake.end(), [cut](double q) { return q < cut; })) / n;
    const double se = std::sqrt(c * (1.0 - c) / n);
    list.add("qv_mixing_fraction", std::abs(below - c) / se, Comparison::less_equal, bonferroni_z(cfg.qv_fraction_alpha, 1), true,
             "fraction below " + detail::time_label(cut) + " = " + detail::time_label(below));

    report.checks = list.take();

    if (cfg.madan_yor) {
        for (auto& r : barycentre_checks(cfg)) report.checks.push_back(std::move(r));
        std::vector<double> times;
        for (double f : cfg.report_fractions) times.push_back(f * cfg.T);
        EmbedOptions eo;
        eo.bm_step = cfg.bm_step;
        eo.throw_on_exhaustion = false;
        eo.family = cfg.barycentre_family;
        const auto e = madan_yor_paths(times, cfg.embed_paths, cfg.rng, eo);
        for (auto& r : madan_yor_checks(e, cfg)) report.checks.push_back(std::move(r));
        report.config["embed_paths"] = cfg.embed_paths;
        report.config["bm_step"] = cfg.bm_step;
    }
    return report;
}

} // namespace fakediff
