#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "fakediff/mixture.hpp"
#include "fakediff/simulate.hpp"
#include "fakediff/stats.hpp"

using namespace fakediff;

namespace {

constexpr std::size_t kPaths = 50'000;

FakeSpec ebm_spec(double K = 0.5, double c = 0.25) {
    return validate_spec(ExponentialBMLaw{}, make_timechange_ebm(K), c);
}

double mean_of(const std::vector<double>& v) { return moments(v).mean; }

std::vector<double> squares(std::vector<double> v) {
    for (auto& x : v) x *= x;
    return v;
}

} // namespace

TEST(PathGrid, NodesAndRecords) {
    const PathGrid g(1.0, 1000, 4);
    EXPECT_EQ(g.n_records(), 251u);
    EXPECT_EQ(g.time(1000), 1.0);
    EXPECT_DOUBLE_EQ(g.record_time(1), 0.004);
    EXPECT_EQ(g.nearest_record(0.249), 62u);
    EXPECT_EQ(g.nearest_record(5.0), 250u);
    EXPECT_THROW(PathGrid(0.0, 10), DomainError);
    EXPECT_THROW(PathGrid(1.0, 0), DomainError);
    EXPECT_THROW(PathGrid(1.0, 10, 3), DomainError);
}

TEST(ExactPaths, MomentsOfExponentialBrownianMotion) {
    const auto e = sample_x_exact(ExponentialBMLaw{}, PathGrid(1.0, 100), kPaths, {42, 0});
    const auto x1 = e.column(100);
    const auto m = moments(x1);
    EXPECT_NEAR(m.std_error, std::sqrt(std::numbers::e - 1.0) / std::sqrt(double(kPaths)), 5e-4);
    EXPECT_LT(std::abs(m.mean - 1.0), 3.0 * m.std_error);
    const auto m2 = moments(squares(x1));
    EXPECT_LT(std::abs(m2.mean - std::numbers::e), 3.0 * m2.std_error);
    for (std::size_t p = 0; p < 100; ++p) {
        EXPECT_EQ(e.value(p, 0), 1.0);
        for (double v : e.path(p)) EXPECT_GT(v, 0.0);
    }
}

TEST(ExactPaths, StepCountDoesNotChangeTheLaw) {
    const auto coarse = sample_x_exact(ExponentialBMLaw{}, PathGrid(1.0, 1), kPaths, {42, 0});
    const auto fine = sample_x_exact(ExponentialBMLaw{}, PathGrid(1.0, 1000, 10), kPaths, {42, 0});
    EXPECT_GT(ks_two_sample(coarse.column(1), fine.column(100)).p_value, 0.01);
    EXPECT_LT(ks_test(coarse.column(1), [](double x) { return lognormal_cdf(1.0, x); }).statistic, 0.012);
}

TEST(ExactPaths, BrownianMarginal) {
    const auto e = sample_x_exact(BrownianLaw{}, PathGrid(2.0, 50), kPaths, {5, 0});
    EXPECT_LT(ks_test(e.column(50), [](double y) { return gaussian_cdf(2.0, y); }).statistic, 0.012);
}

TEST(GPaths, TerminalMarginalIsTheLawAtTheWarpedTime) {
    const auto spec = ebm_spec();
    const double a1 = spec.clock().a(1.0);
    const auto e = sample_g(spec, PathGrid(1.0, 100), kPaths, {42, 0});
    const auto x1 = e.column(100);
    const auto m2 = moments(squares(x1));
    EXPECT_NEAR(std::exp(a1), 1.3472, 1e-4);
    EXPECT_LT(std::abs(m2.mean - std::exp(a1)), 3.0 * m2.std_error);
    EXPECT_LT(ks_test(x1, [&](double x) { return lognormal_cdf(a1, x); }).statistic, 0.012);
    EXPECT_EQ(e.count(Component::g), kPaths);
}

TEST(GPaths, LogQuadraticVariationIsTheWarpedTime) {
    const auto spec = ebm_spec();
    const auto g = sample_g(spec, PathGrid(1.0, 2000), 5000, {42, 0});
    EXPECT_NEAR(mean_of(realized_log_qv(g)) / 0.2980, 1.0, 0.02);
    const auto x = sample_x_exact(ExponentialBMLaw{}, PathGrid(1.0, 2000), 5000, {42, 0});
    EXPECT_NEAR(mean_of(realized_log_qv(x)), 1.0, 0.02);
}

TEST(GPaths, NearIdentityClockMatchesTheLaw) {
    const auto spec = ebm_spec(1.0 - 1e-9, 0.25);
    const auto g = sample_g(spec, PathGrid(1.0, 10), kPaths, {3, 0});
    const auto x = sample_x_exact(ExponentialBMLaw{}, PathGrid(1.0, 10), kPaths, {3, 0});
    for (std::size_t j : {3u, 10u}) {
        const double t = g.grid.record_time(j);
        EXPECT_LT(ks_test(g.column(j), [&](double v) { return lognormal_cdf(t, v); }).statistic, 0.012);
        EXPECT_GT(ks_two_sample(g.column(j), x.column(j)).p_value, 0.01);
    }
}

TEST(HPaths, TerminalMarginalMatchesResidualDensity) {
    const auto spec = ebm_spec();
    const auto h = sample_h(spec, PathGrid(1.0, 1000, 10), kPaths, {42, 0});
    const auto x1 = h.column(100);
    EXPECT_LT(ks_test(x1, [&](double x) { return residual_cdf(spec, 1.0, x); }).statistic, 0.012);
    const auto m = moments(x1);
    EXPECT_LT(std::abs(m.mean - 1.0), 3.0 * m.std_error);
    EXPECT_EQ(h.scheme, Scheme::log_euler);
}

TEST(HPaths, BrownianResidualMarginal) {
    const auto spec = validate_spec(BrownianLaw{}, make_timechange_bm(0.5), 0.25);
    const auto h = sample_h(spec, PathGrid(1.0, 1000, 10), kPaths, {42, 0});
    EXPECT_EQ(h.scheme, Scheme::euler);
    EXPECT_LT(ks_test(h.column(100), [&](double y) { return residual_cdf(spec, 1.0, y); }).statistic, 0.012);
}

TEST(HPaths, VanishingWeightRecoversTheLaw) {
    const auto spec = ebm_spec(0.5, 1e-12);
    const auto h = sample_h(spec, PathGrid(1.0, 200), kPaths, {8, 0});
    EXPECT_GT(ks_test(h.column(200), [](double x) { return lognormal_cdf(1.0, x); }).p_value, 1e-3);
}

TEST(HPaths, InflatedVolatilityIsDetected) {
    const auto spec = ebm_spec();
    SimulationOptions opt;
    opt.eta_scale = 1.5;
    const auto h = sample_h(spec, PathGrid(1.0, 200), kPaths, {42, 0}, opt);
    EXPECT_GT(ks_test(h.column(200), [&](double x) { return residual_cdf(spec, 1.0, x); }).statistic, 0.05);
}

TEST(HPaths, ExplosionGuard) {
    const auto spec = ebm_spec();
    SimulationOptions opt;
    opt.eta_scale = 60.0;
    EXPECT_THROW(sample_h(spec, PathGrid(1.0, 100), 100, {42, 1}, opt), SimulationError);
}

TEST(FakePaths, MixingFractionAndMarginals) {
    const auto spec = ebm_spec();
    const auto e = sample_fake(spec, PathGrid(1.0, 1000, 10), kPaths, {42, 0});
    const double n = double(kPaths);
    const double frac = double(e.count(Component::g)) / n;
    EXPECT_LT(std::abs(frac - 0.25), 3.0 * std::sqrt(0.25 * 0.75 / n));
    EXPECT_EQ(e.count(Component::g) + e.count(Component::h), kPaths);
    for (double t : {0.25, 0.5, 1.0}) {
        const std::size_t j = e.grid.nearest_record(t);
        EXPECT_LT(ks_test(e.column(j), [&](double x) { return lognormal_cdf(t, x); }).statistic, 0.012) << t;
    }
    const auto m = moments(e.column(100));
    EXPECT_LT(std::abs(m.mean - 1.0), 3.0 * m.std_error);
}

TEST(FakePaths, QuadraticVariationSeparatesComponents) {
    const auto spec = ebm_spec();
    const auto e = sample_fake(spec, PathGrid(1.0, 1000), 20'000, {42, 0});
    const auto qv = realized_log_qv(e);
    const double cut = 0.5 * (spec.clock().a(1.0) + 1.0);
    std::size_t below = 0, g_below = 0;
    for (std::size_t p = 0; p < e.n_paths; ++p) {
        below += qv[p] < cut;
        g_below += qv[p] < cut && e.component[p] == Component::g;
    }
    const double n = double(e.n_paths);
    EXPECT_LT(std::abs(double(below) / n - 0.25), 3.0 * std::sqrt(0.25 * 0.75 / n));
    EXPECT_EQ(g_below, e.count(Component::g));
}

TEST(FakePaths, BitIdenticalAcrossThreadCounts) {
    const auto spec = ebm_spec();
    const PathGrid g(1.0, 200);
    const auto a = sample_fake(spec, g, 2000, {99, 1});
    const auto b = sample_fake(spec, g, 2000, {99, 4});
    const auto c = sample_fake(spec, g, 2000, {99, 0});
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.values, c.values);
    EXPECT_EQ(a.component, b.component);
    const auto d = sample_fake(spec, g, 2000, {100, 1});
    EXPECT_NE(a.values, d.values);
}

TEST(RealizedQv, RejectsNonpositiveValues) {
    PathEnsemble e{PathGrid(1.0, 2), 1, {1.0, 0.0, 1.0}, {Component::x_exact}, 0, Scheme::exact};
    EXPECT_THROW(realized_log_qv(e), DomainError);
    EXPECT_DOUBLE_EQ(realized_qv(e)[0], 2.0);
}
