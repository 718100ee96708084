#pragma once

// Pure-state primitives: states, Hermitian operators, the fidelity angle and
// the dispersion that enters every Mandelstam-Tamm type bound.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "qsl/errors.hpp"

namespace qsl {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using Index = Eigen::Index;

inline constexpr double half_pi = std::numbers::pi / 2.0;
inline constexpr Complex imag_unit{0.0, 1.0};

/// Normalized pure state of dimension >= 2.
class StateVector {
  public:
    static constexpr double norm_tolerance = 1e-9;

    explicit StateVector(CVector amplitudes) : amps_(std::move(amplitudes)) {
        if (amps_.size() < 2) {
            throw NumericError("state dimension must be at least 2, got " + std::to_string(amps_.size()));
        }
        if (!amps_.allFinite()) {
            throw NumericError("state has non-finite amplitudes");
        }
        const double norm = amps_.norm();
        if (std::abs(norm - 1.0) > norm_tolerance) {
            throw NumericError("state is not normalized (norm=" + std::to_string(norm) + ")");
        }
    }

    /// Rescales the amplitudes to unit norm.
    static StateVector normalized(const CVector& amplitudes) {
        const double norm = amplitudes.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw NumericError("cannot normalize a zero or non-finite vector");
        }
        return StateVector(amplitudes / norm);
    }

    static StateVector basis(Index dim, Index k) {
        if (k < 0 || k >= dim) {
            throw NumericError("basis index out of range");
        }
        CVector v = CVector::Zero(dim);
        v(k) = 1.0;
        return StateVector(std::move(v));
    }

    Index dim() const noexcept { return amps_.size(); }
    const CVector& amplitudes() const noexcept { return amps_; }
    Complex operator[](Index i) const { return amps_(i); }

    /// <this|other>
    Complex inner(const StateVector& other) const {
        if (dim() != other.dim()) {
            throw NumericError("dimension mismatch in inner product");
        }
        return amps_.dot(other.amps_);
    }

  private:
    CVector amps_;
};

/// Dense Hermitian matrix. The stored matrix is the Hermitian part of the input.
class HermitianOperator {
  public:
    static constexpr double hermiticity_tolerance = 1e-12;

    explicit HermitianOperator(const CMatrix& entries) {
        if (entries.rows() != entries.cols() || entries.rows() < 1) {
            throw NumericError("operator must be a non-empty square matrix");
        }
        if (!entries.allFinite()) {
            throw NumericError("operator has non-finite entries");
        }
        // Tolerance is relative to the entry scale: LZ sweeps produce entries ~1e3.
        const double scale = std::max(1.0, entries.cwiseAbs().maxCoeff());
        const double asym = (entries - entries.adjoint()).cwiseAbs().maxCoeff();
        if (asym > hermiticity_tolerance * scale) {
            throw NumericError("operator is not Hermitian (max |O - O^dagger| = " + std::to_string(asym) + ")");
        }
        m_ = 0.5 * (entries + entries.adjoint());
    }

    static HermitianOperator identity(Index dim) { return HermitianOperator(CMatrix::Identity(dim, dim)); }
    static HermitianOperator zero(Index dim) { return HermitianOperator(CMatrix::Zero(dim, dim)); }

    Index dim() const noexcept { return m_.rows(); }
    const CMatrix& matrix() const noexcept { return m_; }
    Complex operator()(Index i, Index j) const { return m_(i, j); }

    friend HermitianOperator operator+(const HermitianOperator& a, const HermitianOperator& b) {
        check_same_dim(a, b);
        return HermitianOperator(a.m_ + b.m_);
    }
    friend HermitianOperator operator-(const HermitianOperator& a, const HermitianOperator& b) {
        check_same_dim(a, b);
        return HermitianOperator(a.m_ - b.m_);
    }
    friend HermitianOperator operator*(double c, const HermitianOperator& a) { return HermitianOperator(c * a.m_); }

  private:
    static void check_same_dim(const HermitianOperator& a, const HermitianOperator& b) {
        if (a.dim() != b.dim()) {
            throw NumericError("dimension mismatch between operators");
        }
    }

    CMatrix m_;
};

/// Theta = arccos |<a|b>|, in [0, pi/2].
inline double fidelity_angle(const StateVector& a, const StateVector& b) {
    if (a.dim() != b.dim()) {
        throw NumericError("dimension mismatch in fidelity_angle");
    }
    const double overlap = std::min(std::abs(a.inner(b)), 1.0);
    return std::acos(overlap);
}

namespace detail {

inline void check_dims(const HermitianOperator& op, const StateVector& psi, const char* where) {
    if (op.dim() != psi.dim()) {
        throw NumericError(std::string("dimension mismatch in ") + where);
    }
}

inline double residue_scale(const HermitianOperator& op) {
    return std::max(1.0, op.matrix().cwiseAbs().maxCoeff());
}

// <psi|O^2|psi> and <psi|O|psi> from a single matrix-vector product.
inline std::pair<double, double> second_and_first_moment(const HermitianOperator& op, const StateVector& psi) {
    const CVector o_psi = op.matrix() * psi.amplitudes();
    const Complex mean = psi.amplitudes().dot(o_psi);
    if (std::abs(mean.imag()) > 1e-12 * residue_scale(op)) {
        throw NumericError("expectation value has an imaginary residue; operator is not Hermitian");
    }
    return {o_psi.squaredNorm(), mean.real()};
}

}  // namespace detail

/// <psi|O|psi>
inline double expectation(const HermitianOperator& op, const StateVector& psi) {
    detail::check_dims(op, psi, "expectation");
    return detail::second_and_first_moment(op, psi).second;
}

/// sigma[O, psi] = (<O^2> - <O>^2)^(1/2).
inline double variance(const HermitianOperator& op, const StateVector& psi) {
    detail::check_dims(op, psi, "variance");
    const auto [second, mean] = detail::second_and_first_moment(op, psi);
    const double raw = second - mean * mean;
    const double scale = std::max(1.0, second);
    if (raw < -1e-12 * scale) {
        throw NumericError("negative variance residue " + std::to_string(raw));
    }
    // The centered form ||(O - <O>)psi||^2 avoids cancellation when <O> is large.
    const CVector centered = op.matrix() * psi.amplitudes() - mean * psi.amplitudes();
    return std::sqrt(centered.squaredNorm());
}

/// (<psi|O^2|psi>)^(1/2), an upper bound for variance(O, psi).
inline double rms_bound(const HermitianOperator& op, const StateVector& psi) {
    detail::check_dims(op, psi, "rms_bound");
    return std::sqrt(detail::second_and_first_moment(op, psi).first);
}

}  // namespace qsl
