#include <cmath>

#include <gtest/gtest.h>

#include "qsl/models.hpp"
#include "qsl/propagation.hpp"

using namespace qsl;

namespace {

CMatrix pauli_x() {
    CMatrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

CMatrix pauli_y() {
    CMatrix m(2, 2);
    m << 0.0, -imag_unit, imag_unit, 0.0;
    return m;
}

CMatrix pauli_z() {
    CMatrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

double state_distance(const StateVector& a, const StateVector& b) { return (a.amplitudes() - b.amplitudes()).norm(); }

}  // namespace

TEST(TimeGrid, PointsAndRefinement) {
    const TimeGrid g(0.0, 1.0, 11);
    EXPECT_DOUBLE_EQ(g.step(), 0.1);
    EXPECT_EQ(g[10], 1.0);
    EXPECT_EQ(g.points().size(), 11u);
    const TimeGrid r = g.refined(4);
    EXPECT_EQ(r.size(), 41);
    EXPECT_DOUBLE_EQ(r[4], g[1]);
    EXPECT_THROW(TimeGrid(1.0, 0.0, 10), NumericError);
    EXPECT_THROW(TimeGrid(0.0, 1.0, 1), NumericError);
}

TEST(Generator, ValidatesOutput) {
    const TimeDependentGenerator bad(2, [](double) -> CMatrix { return CMatrix::Ones(3, 3); }, "bad");
    EXPECT_THROW(bad(0.0), NumericError);
    const TimeDependentGenerator nan(
        2, [](double t) -> CMatrix { return CMatrix::Identity(2, 2) * (1.0 / t); }, "nan");
    EXPECT_THROW(nan(0.0), NumericError);
    EXPECT_THROW(nan(std::nan("")), NumericError);
}

TEST(Generator, FiniteDifferenceDerivativeMatchesAnalytic) {
    const auto gen = models::periodic_generator({1.0, 0.3, 5.0});
    for (double t : {0.0, 0.2, 1.7}) {
        const CMatrix fd = gen.derivative(t).matrix();
        CMatrix exact(2, 2);
        exact << 0.0, -0.5 * 0.3 * 5.0 * imag_unit * std::exp(-imag_unit * 5.0 * t),
            0.5 * 0.3 * 5.0 * imag_unit * std::exp(imag_unit * 5.0 * t), 0.0;
        EXPECT_LT((fd - exact).norm(), 1e-8) << "t=" << t;
    }
    const auto sum = TimeDependentGenerator::constant(HermitianOperator(pauli_x()), "x") +
                     TimeDependentGenerator::constant(HermitianOperator(pauli_z()), "z");
    EXPECT_TRUE(sum.has_derivative());
    EXPECT_LT(sum.derivative(1.0).matrix().norm(), 1e-15);
}

TEST(UnitaryExponential, ClosedFormMatchesEigenPath) {
    CMatrix k = 0.3 * pauli_x() + 0.7 * pauli_y() - 1.1 * pauli_z() + 0.2 * CMatrix::Identity(2, 2);
    CMatrix big = CMatrix::Zero(3, 3);
    big.topLeftCorner(2, 2) = k;
    const CMatrix u2 = unitary_exponential(k);
    const CMatrix u3 = unitary_exponential(big);
    EXPECT_LT((u2 - u3.topLeftCorner(2, 2)).norm(), 1e-13);
    EXPECT_LT((u2 * u2.adjoint() - CMatrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(Propagate, ConstantGeneratorIsExact) {
    const HermitianOperator h(0.5 * pauli_z() + 0.25 * pauli_x());
    const auto gen = TimeDependentGenerator::constant(h, "h");
    const auto psi0 = StateVector::basis(2, 0);
    const Trajectory traj = propagate(gen, psi0, TimeGrid(0.0, 3.0, 101));
    EXPECT_LT(state_distance(traj.back(), evolve_constant(h, psi0, 3.0)), 1e-12);
}

TEST(Propagate, RotatingFrameSolution) {
    const models::PeriodicParams p{1.0, 0.8, 3.0};
    const auto gen = models::periodic_generator(p);
    const auto psi0 = models::periodic_initial_state(p);
    const TimeGrid grid(0.0, 6.0, 301);
    PropagationOptions opt;
    opt.tolerance = 1e-10;
    PropagationReport rep;
    const Trajectory traj = propagate(gen, psi0, grid, opt, &rep);
    for (Index k = 0; k < grid.size(); k += 30) {
        EXPECT_LT(state_distance(traj[k], models::periodic_exact_state(p, psi0, grid[k])), 1e-9);
    }
    EXPECT_LT(rep.norm_drift, 1e-12);
    EXPECT_GE(rep.substeps, 2);
}

TEST(Propagate, NonConvergenceThrows) {
    const auto gen = models::periodic_generator({1.0, 50.0, 400.0});
    PropagationOptions opt;
    opt.max_refinements = 1;
    opt.tolerance = 1e-14;
    EXPECT_THROW(propagate(gen, StateVector::basis(2, 0), TimeGrid(0.0, 10.0, 11), opt), ConvergenceError);
    EXPECT_THROW(propagate(gen, StateVector::basis(3, 0), TimeGrid(0.0, 1.0, 11)), NumericError);
}

TEST(LevelClusters, GroverHasDegenerateBlock) {
    models::GroverParams p;
    const auto s = eigensystem(models::grover_generator(p)(7.0));
    const auto clusters = level_clusters(s.eigenvalues, 1e-8);
    ASSERT_EQ(clusters.size(), 3u);
    Index biggest = 0;
    for (const auto& c : clusters) {
        biggest = std::max(biggest, c.count);
    }
    EXPECT_EQ(biggest, p.n_items - 2);
}

TEST(Counterdiabatic, LandauZenerClosedForm) {
    const double delta = 0.7;
    const double v = 1.3;
    const auto gen = models::lz_reference_generator(delta, v);
    for (double t : {-3.0, -0.4, 0.0, 0.25, 2.0}) {
        const CMatrix exact = -delta * v / (2.0 * (v * v * t * t + delta * delta)) * pauli_y();
        EXPECT_LT((counterdiabatic_term(gen, t).matrix() - exact).norm(), 1e-6) << "t=" << t;
        const auto ground = eigensystem(gen(t)).eigenvector(0);
        EXPECT_NEAR(counterdiabatic_variance(gen, t, ground), variance(HermitianOperator(exact), ground), 1e-8);
    }
}

TEST(Counterdiabatic, DrivingFollowsTheAdiabaticState) {
    const auto gen = models::lz_reference_generator(1.0, 4.0);
    const TimeGrid grid(-3.0, 3.0, 601);
    const auto psi0 = eigensystem(gen(grid.start())).eigenvector(0);
    const Trajectory adiabatic = adiabatic_state(gen, psi0, grid);
    const Trajectory driven = propagate(counterdiabatic_generator(gen), psi0, grid);
    const Trajectory bare = propagate(gen, psi0, grid);
    double worst = 0.0;
    for (Index k = 0; k < grid.size(); ++k) {
        worst = std::max(worst, fidelity_angle(adiabatic[k], driven[k]));
    }
    EXPECT_LT(worst, 1e-4);
    // Without the counterdiabatic term the fast sweep leaves the ground state.
    EXPECT_GT(fidelity_angle(adiabatic.back(), bare.back()), 0.3);
}

TEST(AdiabaticState, RejectsNonEigenstate) {
    const auto gen = models::lz_reference_generator(1.0, 1.0);
    EXPECT_THROW(adiabatic_state(gen, StateVector::normalized(CVector::Ones(2)), TimeGrid(-1.0, 1.0, 11)),
                 NumericError);
}
