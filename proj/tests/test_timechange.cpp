#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "fakediff/grid.hpp"
#include "fakediff/timechange.hpp"

using namespace fakediff;

namespace {

// Plain bisection on psi(a) = K psi(t), independent of the library solver.
double bisect_clock(double K, double t) {
    double lo = 0.0, hi = t;
    const double target = K * std::sqrt(t) * std::exp(t / 8.0);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (std::sqrt(mid) * std::exp(mid / 8.0) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST(Psi, Values) {
    EXPECT_EQ(psi(0.0), 0.0);
    EXPECT_NEAR(psi(1.0), std::exp(0.125), 1e-15);
    EXPECT_NEAR(psi(1.0), 1.133148, 5e-7);
    EXPECT_NEAR(psi(4.0), 2.0 * std::exp(0.5), 1e-15);
    EXPECT_NEAR(psi(4.0), 3.297443, 5e-7);
    EXPECT_THROW(psi(-1e-9), DomainError);
}

TEST(Phi, ValuesAndMonotonicity) {
    EXPECT_DOUBLE_EQ(phi(4.0), 0.25);
    EXPECT_DOUBLE_EQ(phi(1.0), 0.625);
    EXPECT_GT(phi(0.3), phi(0.31));
    EXPECT_THROW(phi(0.0), DomainError);
    // phi is the log-derivative of psi.
    const double t = 0.7, h = 1e-6;
    EXPECT_NEAR((std::log(psi(t + h)) - std::log(psi(t - h))) / (2 * h), phi(t), 1e-8);
}

TEST(EbmClock, MatchesBisectionOracle) {
    const auto tc = make_timechange_ebm(0.5);
    EXPECT_NEAR(tc.a(1.0), bisect_clock(0.5, 1.0), 1e-14);
    EXPECT_NEAR(tc.a(1.0), 0.2980, 5e-5);
    EXPECT_NEAR(tc.a(1.0), 0.2979632357, 1e-10);
    const double a1 = bisect_clock(0.5, 1.0);
    EXPECT_NEAR(tc.a_dot(1.0), 0.625 / ((a1 + 4.0) / (8.0 * a1)), 1e-13);
    EXPECT_NEAR(tc.a_dot(1.0), 0.3467, 1e-4); // exact value 0.346633
    for (double K : {0.1, 0.9})
        for (double t : {1e-3, 0.2, 3.0, 50.0}) EXPECT_NEAR(make_timechange_ebm(K).a(t), bisect_clock(K, t), 1e-13 * t);
}

TEST(EbmClock, PsiIdentityOnWideGrid) {
    for (double K : {0.1, 0.5, 0.9}) {
        const auto tc = make_timechange_ebm(K);
        for (double t : logspace(1e-4, 1e2, 81)) {
            const double a = tc.a(t);
            EXPECT_NEAR(psi(a) / (K * psi(t)), 1.0, 1e-12) << K << " " << t;
            EXPECT_LT(a, t);
            EXPECT_GT(tc.a_dot(t), 0.0);
            EXPECT_LT(tc.a_dot(t), 1.0);
        }
    }
}

TEST(EbmClock, RateTendsToKSquaredAtZero) {
    const auto tc = make_timechange_ebm(0.5);
    EXPECT_NEAR(tc.a_dot(1e-6), 0.25, 1e-3);
    EXPECT_EQ(tc.a_dot(0.0), 0.25);
    EXPECT_EQ(tc.a(0.0), 0.0);
}

TEST(EbmClock, DerivativeMatchesCentralDifferences) {
    for (double K : {0.2, 0.5, 0.9}) {
        const auto tc = make_timechange_ebm(K);
        for (double t : logspace(1e-4, 1e2, 61)) {
            const double h = 1e-5 * t;
            const double fd = (tc.a(t + h) - tc.a(t - h)) / (2 * h);
            EXPECT_LT(std::abs(tc.a_dot(t) - fd), 1e-6) << K << " " << t;
        }
    }
}

TEST(EbmClock, StrictlyIncreasingAndApproachesIdentity) {
    const auto tc = make_timechange_ebm(0.5);
    const auto ts = logspace(1e-4, 1e2, 200);
    for (std::size_t i = 1; i < ts.size(); ++i) EXPECT_GT(tc.a(ts[i]), tc.a(ts[i - 1]));
    const auto near_one = make_timechange_ebm(1.0 - 1e-9);
    EXPECT_NEAR(near_one.a(2.0), 2.0, 1e-7);
}

TEST(BmClock, ExactlyKSquaredT) {
    const auto tc = make_timechange_bm(0.5);
    EXPECT_EQ(tc.a(2.0), 0.5);
    EXPECT_EQ(tc.a(0.0), 0.0);
    for (double t : {0.1, 1.0, 7.0}) {
        EXPECT_EQ(tc.a(t), 0.25 * t);
        EXPECT_EQ(tc.a_dot(t), 0.25);
    }
}

TEST(Clocks, RejectInvalidK) {
    for (double K : {0.0, 1.0, -0.2, 1.5, std::nan("")}) {
        EXPECT_THROW(make_timechange_ebm(K), ValidationError);
        EXPECT_THROW(make_timechange_bm(K), ValidationError);
    }
    try {
        make_timechange_ebm(1.0);
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.code(), ValidationCode::invalid_k);
    }
    EXPECT_THROW(make_timechange_ebm(0.5).a(-1.0), DomainError);
}

TEST(RatioInfimum, EbmAttainsKAtOne) {
    const DiffusionLaw law = ExponentialBMLaw{};
    const auto tc = make_timechange_ebm(0.5);
    const auto ts = linspace(0.1, 4.0, 40);
    auto ys = logspace(0.05, 20.0, 201);
    ys.push_back(1.0);
    const auto r = ratio_infimum(law, tc, ts, ys);
    EXPECT_NEAR(r.value, 0.5, 1e-10);
    EXPECT_EQ(r.y, 1.0);
}

TEST(RatioInfimum, BmAttainsKAtZero) {
    const DiffusionLaw law = BrownianLaw{};
    const auto tc = make_timechange_bm(0.5);
    const auto r = ratio_infimum(law, tc, linspace(0.1, 4.0, 40), linspace(-5.0, 5.0, 201));
    EXPECT_NEAR(r.value, 0.5, 1e-10);
    EXPECT_EQ(r.y, 0.0);
}

TEST(RatioInfimum, DefaultAuditGridRecoversK) {
    for (double K : {0.3, 0.5, 0.9}) {
        EXPECT_NEAR(ratio_infimum(ExponentialBMLaw{}, make_timechange_ebm(K)).value, K, 1e-10);
        EXPECT_NEAR(ratio_infimum(BrownianLaw{}, make_timechange_bm(K)).value, K, 1e-12);
    }
}

TEST(RatioInfimum, IdentityClockGivesOne) {
    const auto id = make_timechange_tabulated(1.0, {0.0, 1.0, 20.0}, {0.0, 1.0, 20.0});
    EXPECT_NEAR(ratio_infimum(ExponentialBMLaw{}, id).value, 1.0, 1e-12);
}

TEST(RatioInfimum, RejectsDegenerateGrids) {
    const DiffusionLaw law = ExponentialBMLaw{};
    const auto tc = make_timechange_ebm(0.5);
    std::vector<double> empty;
    std::vector<double> one{1.0};
    EXPECT_THROW(ratio_infimum(law, tc, empty, one), ValidationError);
    std::vector<double> bad_y{-1.0};
    EXPECT_THROW(ratio_infimum(law, tc, one, bad_y), ValidationError);
}

TEST(TabulatedClock, InterpolatesMonotonically) {
    const auto ebm = make_timechange_ebm(0.5);
    std::vector<double> ts{0.0}, as{0.0};
    for (double t : logspace(1e-3, 20.0, 200)) {
        ts.push_back(t);
        as.push_back(ebm.a(t));
    }
    const auto tab = make_timechange_tabulated(0.5, ts, as);
    EXPECT_EQ(tab.kind(), ClockKind::tabulated);
    EXPECT_NEAR(tab.a(1.0), ebm.a(1.0), 1e-5);
    EXPECT_NEAR(tab.a_dot(1.0), ebm.a_dot(1.0), 1e-3);
    const auto grid = linspace(0.0, 19.0, 500);
    for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_GE(tab.a(grid[i]), tab.a(grid[i - 1]));
    EXPECT_THROW(make_timechange_tabulated(0.5, {0.1, 1.0}, {0.0, 0.5}), ValidationError);
    EXPECT_THROW(make_timechange_tabulated(0.5, {0.0, 1.0, 1.0}, {0.0, 0.5, 0.6}), ValidationError);
    EXPECT_THROW(make_timechange_tabulated(0.5, {0.0}, {0.0}), ValidationError);
}
