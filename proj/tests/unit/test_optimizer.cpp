#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "qsl/optimizer.hpp"
#include "qsl/scenarios.hpp"

using namespace qsl;

TEST(NelderMead, FindsQuadraticMinimum) {
    auto f = [](const Point2& x) { return (x[0] - 1.0) * (x[0] - 1.0) + 3.0 * (x[1] + 2.0) * (x[1] + 2.0); };
    const auto r = nelder_mead(f, {0.0, 0.0}, {0.1, 0.1});
    EXPECT_NEAR(r.best[0], 1.0, 1e-5);
    EXPECT_NEAR(r.best[1], -2.0, 1e-5);
    EXPECT_LE(r.evaluations, 500 + 3);
    for (std::size_t i = 1; i < r.history.size(); ++i) {
        EXPECT_LE(r.history[i], r.history[i - 1]);
    }
}

TEST(NelderMead, RejectsNonFiniteValues) {
    auto f = [](const Point2& x) {
        return x[0] < 0.5 ? std::numeric_limits<double>::quiet_NaN() : (x[0] - 1.0) * (x[0] - 1.0) + x[1] * x[1];
    };
    const auto r = nelder_mead(f, {0.8, 0.3}, {0.1, 0.1});
    EXPECT_TRUE(std::isfinite(r.value));
    EXPECT_NEAR(r.best[0], 1.0, 1e-5);
}

TEST(NelderMead, EvaluationBudgetIsRespected) {
    NelderMeadOptions o;
    o.max_evaluations = 20;
    const auto r = nelder_mead([](const Point2& x) { return std::cosh(x[0]) + std::cosh(x[1]); }, {3.0, -3.0},
                               {0.01, 0.01}, o);
    EXPECT_LE(r.evaluations, 20 + 2);
}

TEST(Optimizer, VanishingDriveRecoversTheExactAngle) {
    const models::PeriodicParams p{1.0, 1e-9, 20.0};
    const auto psi0 = models::periodic_initial_state(p);
    const auto target = models::y_target();
    const TimeGrid grid(0.0, 2.0, 21);
    const auto o = optimize_bounds(p, target, psi0, grid);
    for (Index k = 0; k < grid.size(); ++k) {
        const double exact = fidelity_angle(target, models::periodic_exact_state(p, psi0, grid[k]));
        EXPECT_NEAR(o.theta_u_opt[static_cast<std::size_t>(k)], exact, 1e-6);
    }
}

TEST(Optimizer, RandomCandidatesKeepTheSandwich) {
    const models::PeriodicParams p{1.0, 0.8, 20.0};
    const auto psi0 = models::periodic_initial_state(p);
    const auto target = models::y_target();
    const TimeGrid grid(0.0, 5.0 * p.period(), 101);
    std::mt19937_64 rng(20261018);
    std::uniform_real_distribution<double> d(0.5, 1.5);
    std::uniform_real_distribution<double> h(-0.5, 0.5);
    for (int i = 0; i < 100; ++i) {
        const Point2 c{d(rng), h(rng)};
        const auto [lower, upper] = constant_reference_bounds(p, target, psi0, grid, c);
        for (Index k = 0; k < grid.size(); k += 10) {
            const double exact = fidelity_angle(target, models::periodic_exact_state(p, psi0, grid[k]));
            EXPECT_LE(lower[static_cast<std::size_t>(k)], exact + 2e-6);
            EXPECT_GE(upper[static_cast<std::size_t>(k)], exact - 2e-6);
        }
    }
}

TEST(Optimizer, SeedMatchesTheFloquetMagnusScenario) {
    const models::PeriodicParams p{1.0, 0.2, 20.0};
    scenarios::PeriodicOptions po;
    po.periods = 2.0;
    po.n_steps = 101;
    const auto run = scenarios::run_periodic(p, scenarios::PeriodicTarget::initial, po);
    const auto fm = models::floquet_magnus_reference(p);
    const auto [lower, upper] = constant_reference_bounds(p, models::periodic_initial_state(p),
                                                          models::periodic_initial_state(p), run.bounds.grid,
                                                          {fm.delta_ref, fm.h_ref});
    for (std::size_t k = 0; k < lower.size(); ++k) {
        EXPECT_NEAR(lower[k], run.bounds.theta_l_raw[k], 1e-6);
        EXPECT_NEAR(upper[k], run.bounds.theta_u_raw[k], 1e-6);
    }
}

TEST(Optimizer, DominatesTheSeedAndIsDeterministic) {
    const models::PeriodicParams p{1.0, 0.2, 20.0};
    const auto psi0 = models::periodic_initial_state(p);
    const TimeGrid grid(0.0, 10.0 * p.period(), 200);
    const auto a = optimize_bounds(p, psi0, psi0, grid);
    const auto b = optimize_bounds(p, psi0, psi0, grid);
    bool positive_where_seed_negative = false;
    for (std::size_t k = 0; k < a.theta_u_opt.size(); ++k) {
        EXPECT_LE(a.theta_u_opt[k], a.seed_theta_u[k]);
        EXPECT_GE(a.theta_l_opt[k], a.seed_theta_l[k]);
        EXPECT_EQ(a.theta_u_opt[k], b.theta_u_opt[k]);
        EXPECT_EQ(a.theta_l_opt[k], b.theta_l_opt[k]);
        positive_where_seed_negative =
            positive_where_seed_negative || (a.theta_l_opt[k] > 0.0 && a.seed_theta_l[k] < 0.0);
    }
    EXPECT_TRUE(positive_where_seed_negative);
}

TEST(Optimizer, RejectsLargerDimensions) {
    const models::PeriodicParams p;
    const auto psi = StateVector::basis(3, 0);
    EXPECT_THROW(optimize_bounds(p, psi, psi, TimeGrid(0.0, 1.0, 3)), NumericError);
}
