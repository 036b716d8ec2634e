// Builds the default fake exponential Brownian motion, simulates it and compares
// its marginals and quadratic variation with the real thing.

#include <cstdio>

#include "fakediff/fakediff.hpp"

using namespace fakediff;

int main() {
    const DiffusionLaw law = ExponentialBMLaw{};
    const FakeSpec spec = validate_spec(law, make_timechange(law, 0.5), 0.25);

    std::printf("a(1) = %.10f, a_dot(1) = %.10f, L^2 = %g\n", spec.clock().a(1.0), spec.clock().a_dot(1.0), spec.L2());
    for (double y : {0.5, 1.0, 2.0})
        std::printf("eta(1, %.1f) = %.6f   h_1(%.1f) = %.6f\n", y, local_vol_eta(spec, 1.0, y), y,
                    residual_density(spec, 1.0, y));

    const PathGrid grid(1.0, 500);
    const RNGConfig rng{7, 0};
    const auto fake = sample_fake(spec, grid, 20'000, rng);
    const auto real = sample_x_exact(law, grid, 20'000, {8, 0});

    const auto ks = ks_test(fake.column(grid.n_records() - 1), [](double x) { return lognormal_cdf(1.0, x); });
    std::printf("KS of fake X_1 against the lognormal law: D = %.4f, p = %.3f\n", ks.statistic, ks.p_value);

    const auto qv_fake = realized_log_qv(fake);
    const auto qv_real = realized_log_qv(real);
    const auto two = ks_two_sample(qv_fake, qv_real);
    std::printf("two-sample KS of realized log-QV (fake vs real): D = %.3f, p = %.2g\n", two.statistic, two.p_value);
    std::printf("fraction of G paths: %.4f (c = %.2f)\n",
                static_cast<double>(fake.count(Component::g)) / static_cast<double>(fake.n_paths), spec.c());

    const auto surface = solve_dupire(spec, 1.0);
    std::printf("max |C_pde - C_h| at T = 1: %.2e\n", dupire_quadrature_error(surface, spec));
}
