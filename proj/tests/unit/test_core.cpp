#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "qsl/core.hpp"

using namespace qsl;

namespace {

CVector random_vector(Index d, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    CVector v(d);
    for (Index i = 0; i < d; ++i) {
        v(i) = Complex(g(rng), g(rng));
    }
    return v;
}

HermitianOperator random_operator(Index d, std::mt19937_64& rng) {
    CMatrix m(d, d);
    for (Index j = 0; j < d; ++j) {
        m.col(j) = random_vector(d, rng);
    }
    return HermitianOperator(0.5 * (m + m.adjoint()));
}

}  // namespace

TEST(StateVector, RejectsBadInput) {
    EXPECT_THROW(StateVector(CVector::Ones(1)), NumericError);
    EXPECT_THROW(StateVector(CVector::Ones(2)), NumericError);
    CVector v = CVector::Zero(2);
    v(0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(StateVector{v}, NumericError);
    EXPECT_THROW(StateVector::normalized(CVector::Zero(3)), NumericError);
    EXPECT_THROW(StateVector::basis(2, 2), NumericError);
}

TEST(StateVector, NormalizedAndBasis) {
    const auto s = StateVector::normalized(CVector::Ones(4));
    EXPECT_NEAR(s.amplitudes().norm(), 1.0, 1e-15);
    EXPECT_EQ(StateVector::basis(3, 1)[1], Complex(1.0));
    EXPECT_THROW(StateVector::basis(2, 0).inner(StateVector::basis(3, 0)), NumericError);
}

TEST(HermitianOperator, ValidatesAndSymmetrizes) {
    CMatrix m(2, 2);
    m << 1.0, Complex(0.0, 1.0), Complex(0.0, 1.0), 1.0;
    EXPECT_THROW(HermitianOperator{m}, NumericError);
    EXPECT_THROW(HermitianOperator(CMatrix::Zero(2, 3)), NumericError);
    CMatrix nearly(2, 2);
    nearly << 1.0, Complex(0.5, 1e-14), Complex(0.5, 0.0), -1.0;
    const HermitianOperator h(nearly);
    EXPECT_EQ(h.matrix(), h.matrix().adjoint());
    const auto sum = h + HermitianOperator::identity(2);
    EXPECT_EQ(sum(0, 0), Complex(2.0));
    EXPECT_THROW(h + HermitianOperator::identity(3), NumericError);
}

TEST(FidelityAngle, QuarterPiOracle) {
    CVector b(2);
    b << 1.0, imag_unit;
    EXPECT_NEAR(fidelity_angle(StateVector::basis(2, 0), StateVector::normalized(b)), 0.78539816339744830962,
                1e-15);
    EXPECT_NEAR(fidelity_angle(StateVector::basis(2, 0), StateVector::basis(2, 1)), std::numbers::pi / 2, 1e-15);
    EXPECT_EQ(fidelity_angle(StateVector::basis(2, 0), StateVector::basis(2, 0)), 0.0);
}

TEST(FidelityAngle, MetricProperties) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        const Index d = 2 + trial % 4;
        const auto a = StateVector::normalized(random_vector(d, rng));
        const auto b = StateVector::normalized(random_vector(d, rng));
        const auto c = StateVector::normalized(random_vector(d, rng));
        const double ab = fidelity_angle(a, b);
        EXPECT_GE(ab, 0.0);
        EXPECT_LE(ab, std::numbers::pi / 2);
        EXPECT_NEAR(ab, fidelity_angle(b, a), 1e-14);
        EXPECT_LE(fidelity_angle(a, c), ab + fidelity_angle(b, c) + 1e-12);
        const Complex phase = std::exp(Complex(0.0, 0.37 * trial));
        EXPECT_NEAR(fidelity_angle(StateVector(phase * a.amplitudes()), b), ab, 1e-12);
    }
}

TEST(Variance, EigenstateHasZeroVariance) {
    CMatrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    const HermitianOperator z(m);
    EXPECT_NEAR(variance(z, StateVector::basis(2, 0)), 0.0, 1e-15);
    EXPECT_NEAR(variance(z, StateVector::normalized(CVector::Ones(2))), 1.0, 1e-15);
    EXPECT_NEAR(expectation(z, StateVector::basis(2, 1)), -1.0, 1e-15);
}

TEST(Variance, BoundedByRmsAndShiftInvariant) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const Index d = 2 + trial % 4;
        const auto op = random_operator(d, rng);
        const auto psi = StateVector::normalized(random_vector(d, rng));
        const double s = variance(op, psi);
        EXPECT_LE(s, rms_bound(op, psi) + 1e-12);
        const double c = 1e3 * (trial % 2 ? 1.0 : -1.0);
        EXPECT_NEAR(variance(op + c * HermitianOperator::identity(d), psi), s, 1e-9);
        EXPECT_NEAR(variance(2.5 * op, psi), 2.5 * s, 1e-12);
    }
}

TEST(Variance, DimensionMismatchThrows) {
    EXPECT_THROW(variance(HermitianOperator::identity(3), StateVector::basis(2, 0)), NumericError);
    EXPECT_THROW(expectation(HermitianOperator::identity(3), StateVector::basis(2, 0)), NumericError);
}
