#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "qsl/models.hpp"

using namespace qsl;
using namespace qsl::models;

TEST(GroverTheta, OracleValues) {
    EXPECT_NEAR(grover_theta(10, 1.0, 0.0), 0.6435011087932843868, 1e-15);
    EXPECT_NEAR(grover_theta(10, 0.0, 1.0), std::numbers::pi, 1e-15);
    EXPECT_NEAR(grover_theta(10, 0.5, 0.5), 1.8925468811915388126, 1e-15);
    EXPECT_THROW(grover_theta(2, 1.0, 0.0), NumericError);
    EXPECT_THROW(grover_theta(10, 0.0, 0.0), NumericError);
}

TEST(GroverBounds, ClosedForms) {
    GroverParams p;
    const auto [l0, u0] = grover_analytic_bounds(p, 0.0);
    EXPECT_NEAR(u0, 1.2490457723982544258, 1e-14);
    EXPECT_NEAR(l0, u0, 1e-15);
    const auto [lf, uf] = grover_analytic_bounds(p, p.t_f);
    EXPECT_NEAR(uf, u0, 1e-15);
    EXPECT_NEAR(lf, u0 - (std::numbers::pi - 0.6435011087932843868), 1e-12);
    EXPECT_NEAR(grover_theta_at(p, grover_min_time(p)), 1.8925468811915388126, 1e-9);
}

TEST(GroverSchedule, EndpointsAndDeviationFromLinear) {
    for (auto s : {Schedule::protocol1, Schedule::protocol2}) {
        for (double k : {1.0, 10.0, 20.0}) {
            EXPECT_NEAR(s_protocol(s, k, 0.0), 0.0, 1e-13);
            EXPECT_NEAR(s_protocol(s, k, 1.0), 1.0, 1e-13);
            EXPECT_NEAR(s_protocol(s, k, 0.5), 0.5, 1e-14);
        }
        double worst = 0.0;
        for (int i = 0; i <= 100000; ++i) {
            const double tau = i / 100000.0;
            worst = std::max(worst, std::abs(s_protocol(s, 1.0, tau) - tau));
        }
        EXPECT_NEAR(worst, 0.0039599643667563576705, 1e-9);
    }
    EXPECT_THROW(s_protocol(Schedule::protocol1, 0.5, 0.2), NumericError);
    EXPECT_THROW(s_protocol(Schedule::protocol1, 1.0, 1.2), NumericError);
}

TEST(GroverSchedule, DerivativesMatchFiniteDifferences) {
    for (auto s : {Schedule::protocol1, Schedule::protocol2}) {
        for (double tau : {0.1, 0.4, 0.77}) {
            const double h = 1e-6;
            const double fd = (s_protocol(s, 5.0, tau + h) - s_protocol(s, 5.0, tau - h)) / (2.0 * h);
            EXPECT_NEAR(s_protocol_derivative(s, 5.0, tau), fd, 1e-7);
        }
    }
    GroverParams p;
    p.schedule = Schedule::protocol2;
    p.k = 4.0;
    for (double t : {1.0, 9.0, 15.0}) {
        const double h = 1e-6;
        const double fd = (grover_theta_at(p, t + h) - grover_theta_at(p, t - h)) / (2.0 * h);
        EXPECT_NEAR(grover_theta_dot(p, t), fd, 1e-7);
    }
}

TEST(GroverGenerator, InitialStateIsGroundState) {
    GroverParams p;
    const auto gen = grover_generator(p);
    const auto s = eigensystem(gen(0.0));
    EXPECT_NEAR(fidelity_angle(s.eigenvector(0), uniform_state(p.n_items)), 0.0, 1e-7);
    EXPECT_TRUE(gen.has_derivative());
    EXPECT_TRUE(grover_cd_term(10, 0.3).matrix().isApprox(grover_cd_term(10, 0.3).matrix().adjoint()));
}

TEST(FloquetMagnus, CoefficientOracle) {
    const auto fm = floquet_magnus_reference({1.0, 0.2, 20.0});
    EXPECT_NEAR(fm.delta_ref, 0.9989, 1e-15);
    EXPECT_NEAR(fm.h_ref, -0.01049, 1e-15);
}

TEST(Periodic, InitialStateAndTarget) {
    const PeriodicParams p{1.0, 0.8, 20.0};
    const auto psi0 = periodic_initial_state(p);
    EXPECT_GT(expectation(two_level_hamiltonian(p.delta, p.h), psi0), 0.0);
    EXPECT_NEAR(variance(two_level_hamiltonian(p.delta, p.h), psi0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(y_target()[1]), std::sqrt(0.5), 1e-15);
    EXPECT_THROW(PeriodicParams({1.0, 0.0, 20.0}).validate(), NumericError);
}

TEST(LandauZener, FormulaOracle) {
    EXPECT_NEAR(lz_overlap(1.0, std::numbers::pi / 2), 0.3678794411714423216, 1e-15);
    EXPECT_NEAR(lz_overlap(1.0, 2.0), 0.45593812776599623677, 1e-15);
}

TEST(LandauZener, TwistedGeneratorReducesWithoutTwist) {
    const TwistedLZParams p{1.0, 2.0, 0.1, TwistProtocol::none};
    const auto a = twisted_lz_generator(p)(0.3).matrix();
    const auto b = lz_reference_generator(1.0, 2.0)(0.3).matrix();
    EXPECT_EQ(a, b);
    EXPECT_NEAR(phi_protocol(TwistProtocol::tanh_step, 0.1, 0.0), std::numbers::pi, 1e-15);
    EXPECT_NEAR(phi_protocol(TwistProtocol::gaussian, 0.1, 0.0), std::numbers::pi, 1e-15);
}

TEST(LandauZener, MajorantOracle) {
    const TimeGrid window(-30.0, 30.0, 600001);
    EXPECT_NEAR(twist_variance_majorant({1.0, 2.0, 0.1, TwistProtocol::gaussian}, window),
                0.43665155020052802758, 1e-8);
    EXPECT_NEAR(twist_variance_majorant({1.0, 2.0, 0.1, TwistProtocol::tanh_step}, window),
                0.37038741039649323407, 1e-8);
}
