#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qsl/core.hpp"

namespace qsl {

/// Uniform grid of n_steps points on [t_start, t_end], both ends included.
class TimeGrid {
  public:
    TimeGrid(double t_start, double t_end, Index n_steps) : start_(t_start), end_(t_end), n_(n_steps) {
        if (!(t_end > t_start) || !std::isfinite(t_start) || !std::isfinite(t_end)) {
            throw NumericError("time grid needs finite t_end > t_start");
        }
        if (n_steps < 2) {
            throw NumericError("time grid needs at least 2 points");
        }
    }

    double start() const noexcept { return start_; }
    double end() const noexcept { return end_; }
    Index size() const noexcept { return n_; }
    double step() const noexcept { return (end_ - start_) / static_cast<double>(n_ - 1); }

    double operator[](Index k) const noexcept {
        return k == n_ - 1 ? end_ : start_ + static_cast<double>(k) * step();
    }

    std::vector<double> points() const {
        std::vector<double> out(static_cast<std::size_t>(n_));
        for (Index k = 0; k < n_; ++k) {
            out[static_cast<std::size_t>(k)] = (*this)[k];
        }
        return out;
    }

    /// Same interval with `factor` sub-intervals per original interval.
    TimeGrid refined(Index factor) const { return TimeGrid(start_, end_, (n_ - 1) * factor + 1); }

    bool operator==(const TimeGrid&) const = default;

  private:
    double start_;
    double end_;
    Index n_;
};

/// Closed interval on which a generator may be evaluated.
struct TimeWindow {
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();

    bool contains(double t) const noexcept { return t >= lower && t <= upper; }
};

/// t -> H(t). Evaluation validates finiteness and hermiticity.
class TimeDependentGenerator {
  public:
    using Function = std::function<CMatrix(double)>;

    TimeDependentGenerator(Index dim, Function f, std::string label, TimeWindow domain = {},
                           double time_scale = 1.0)
        : dim_(dim), f_(std::move(f)), label_(std::move(label)), domain_(domain), time_scale_(time_scale) {
        if (dim_ < 2) {
            throw NumericError("generator dimension must be at least 2");
        }
        if (!(time_scale_ > 0.0)) {
            throw NumericError("generator time scale must be positive");
        }
    }

    static TimeDependentGenerator constant(const HermitianOperator& h, std::string label) {
        CMatrix m = h.matrix();
        const Index n = h.dim();
        return TimeDependentGenerator(n, [m](double) { return m; }, std::move(label))
            .with_derivative([n](double) -> CMatrix { return CMatrix::Zero(n, n); });
    }

    static TimeDependentGenerator zero(Index dim) {
        return constant(HermitianOperator::zero(dim), "zero");
    }

    HermitianOperator operator()(double t) const {
        if (!std::isfinite(t)) {
            throw NumericError("generator '" + label_ + "' evaluated at non-finite time");
        }
        CMatrix m = f_(t);
        if (m.rows() != dim_ || m.cols() != dim_) {
            throw NumericError("generator '" + label_ + "' returned a matrix of the wrong size");
        }
        if (!m.allFinite()) {
            throw NumericError("generator '" + label_ + "' produced NaN/Inf at t=" + std::to_string(t));
        }
        return HermitianOperator(m);
    }

    /// Copy of this generator with an analytic dH/dt attached.
    TimeDependentGenerator with_derivative(Function df) const {
        TimeDependentGenerator out = *this;
        out.df_ = std::move(df);
        return out;
    }

    bool has_derivative() const noexcept { return static_cast<bool>(df_); }

    /// dH/dt: the attached derivative when present, otherwise a Richardson-extrapolated
    /// finite difference (one-sided second order at the domain edges).
    HermitianOperator derivative(double t) const {
        if (df_) {
            CMatrix m = df_(t);
            if (m.rows() != dim_ || m.cols() != dim_ || !m.allFinite()) {
                throw NumericError("derivative of '" + label_ + "' is malformed at t=" + std::to_string(t));
            }
            return HermitianOperator(m);
        }
        auto diff = [&](double d) -> CMatrix {
            if (domain_.contains(t - d) && domain_.contains(t + d)) {
                return (f_(t + d) - f_(t - d)) / (2.0 * d);
            }
            if (domain_.contains(t + 2.0 * d)) {
                return (-3.0 * f_(t) + 4.0 * f_(t + d) - f_(t + 2.0 * d)) / (2.0 * d);
            }
            if (domain_.contains(t - 2.0 * d)) {
                return (3.0 * f_(t) - 4.0 * f_(t - d) + f_(t - 2.0 * d)) / (2.0 * d);
            }
            throw NumericError("finite-difference stencil does not fit the generator domain");
        };
        double d = 1e-3 * time_scale_;
        CMatrix previous = diff(d);
        double change = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 30; ++i) {
            d *= 0.5;
            const CMatrix current = diff(d);
            const CMatrix extrapolated = (4.0 * current - previous) / 3.0;
            change = (extrapolated - current).norm();
            if (change <= 1e-9 * std::max(1.0, extrapolated.norm())) {
                return HermitianOperator(extrapolated);
            }
            previous = current;
        }
        throw ConvergenceError("derivative of '" + label_ + "' did not converge at t=" + std::to_string(t), change,
                               1e-9);
    }

    Index dim() const noexcept { return dim_; }
    const std::string& label() const noexcept { return label_; }
    const TimeWindow& domain() const noexcept { return domain_; }
    double time_scale() const noexcept { return time_scale_; }

    friend TimeDependentGenerator operator+(const TimeDependentGenerator& a, const TimeDependentGenerator& b) {
        return combine(a, b, +1.0, "+");
    }
    friend TimeDependentGenerator operator-(const TimeDependentGenerator& a, const TimeDependentGenerator& b) {
        return combine(a, b, -1.0, "-");
    }

  private:
    static TimeDependentGenerator combine(const TimeDependentGenerator& a, const TimeDependentGenerator& b,
                                          double sign, const char* op) {
        if (a.dim() != b.dim()) {
            throw NumericError("dimension mismatch combining generators");
        }
        TimeWindow w{std::max(a.domain_.lower, b.domain_.lower), std::min(a.domain_.upper, b.domain_.upper)};
        auto fa = a.f_;
        auto fb = b.f_;
        TimeDependentGenerator out(
            a.dim(), [fa, fb, sign](double t) -> CMatrix { return fa(t) + sign * fb(t); },
            "(" + a.label_ + op + b.label_ + ")", w, std::min(a.time_scale_, b.time_scale_));
        if (a.df_ && b.df_) {
            out.df_ = [da = a.df_, db = b.df_, sign](double t) -> CMatrix { return da(t) + sign * db(t); };
        }
        return out;
    }

    Index dim_;
    Function f_;
    std::string label_;
    TimeWindow domain_;
    double time_scale_;
    Function df_;
};

/// Grid plus one state per grid point.
struct Trajectory {
    TimeGrid grid;
    std::vector<StateVector> states;

    const StateVector& operator[](Index k) const { return states[static_cast<std::size_t>(k)]; }
    const StateVector& back() const { return states.back(); }
};

/// Ascending eigenvalues, eigenvectors as columns with fixed phase convention.
struct Spectrum {
    Eigen::VectorXd eigenvalues;
    CMatrix eigenvectors;

    Index size() const noexcept { return eigenvalues.size(); }
    StateVector eigenvector(Index i) const { return StateVector::normalized(eigenvectors.col(i)); }
};

/// Eigen-decomposition; each eigenvector's largest-magnitude component is made
/// real positive (ties broken towards the lowest index).
inline Spectrum eigensystem(const HermitianOperator& op) {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(op.matrix());
    if (solver.info() != Eigen::Success) {
        throw NumericError("eigensolver failed");
    }
    Spectrum s{solver.eigenvalues(), solver.eigenvectors()};
    for (Index j = 0; j < s.eigenvectors.cols(); ++j) {
        auto col = s.eigenvectors.col(j);
        Index best = 0;
        double best_abs = std::abs(col(0));
        for (Index i = 1; i < col.size(); ++i) {
            const double a = std::abs(col(i));
            if (a > best_abs * (1.0 + 1e-12)) {
                best = i;
                best_abs = a;
            }
        }
        col *= std::conj(col(best)) / best_abs;
    }
    return s;
}

/// exp(-i K) for Hermitian K. Closed form for 2x2.
inline CMatrix unitary_exponential(const CMatrix& k) {
    if (k.rows() == 2) {
        const Complex a = k(0, 0);
        const Complex d = k(1, 1);
        const Complex b = k(0, 1);
        const double mean = 0.5 * (a.real() + d.real());
        const double z = 0.5 * (a.real() - d.real());
        const double r = std::sqrt(z * z + std::norm(b));
        const double c = std::cos(r);
        const double sinc = r > 1e-8 ? std::sin(r) / r : 1.0 - r * r / 6.0;
        const Complex phase = std::exp(-imag_unit * mean);
        CMatrix u(2, 2);
        u(0, 0) = phase * (c - imag_unit * sinc * z);
        u(1, 1) = phase * (c + imag_unit * sinc * z);
        u(0, 1) = phase * (-imag_unit * sinc * b);
        u(1, 0) = phase * (-imag_unit * sinc * std::conj(b));
        return u;
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(0.5 * (k + k.adjoint()));
    if (solver.info() != Eigen::Success) {
        throw NumericError("eigensolver failed in unitary_exponential");
    }
    const Eigen::VectorXcd phases =
        (-imag_unit * solver.eigenvalues().cast<Complex>()).array().exp().matrix();
    return solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
}

/// e^{-i H t} psi for a constant H.
inline StateVector evolve_constant(const HermitianOperator& h, const StateVector& psi, double t) {
    return StateVector::normalized(unitary_exponential(t * h.matrix()) * psi.amplitudes());
}

namespace detail {

// Fourth-order Magnus step with two Gauss-Legendre nodes.
inline CMatrix magnus4_step(const CMatrix& h1, const CMatrix& h2, double dt) {
    static const double c = std::sqrt(3.0) / 12.0;
    CMatrix k = 0.5 * dt * (h1 + h2);
    k.noalias() -= imag_unit * (c * dt * dt) * (h2 * h1 - h1 * h2);
    return unitary_exponential(k);
}

inline std::vector<CVector> propagate_fixed(const TimeDependentGenerator& gen, const CVector& psi0,
                                            const TimeGrid& grid, Index substeps) {
    static const double gauss_offset = std::sqrt(3.0) / 6.0;
    std::vector<CVector> out;
    out.reserve(static_cast<std::size_t>(grid.size()));
    out.push_back(psi0);
    CVector psi = psi0;
    for (Index k = 0; k + 1 < grid.size(); ++k) {
        const double t0 = grid[k];
        const double dt = (grid[k + 1] - t0) / static_cast<double>(substeps);
        for (Index s = 0; s < substeps; ++s) {
            const double ts = t0 + static_cast<double>(s) * dt;
            const CMatrix h1 = gen(ts + (0.5 - gauss_offset) * dt).matrix();
            const CMatrix h2 = gen(ts + (0.5 + gauss_offset) * dt).matrix();
            psi = magnus4_step(h1, h2, dt) * psi;
        }
        out.push_back(psi);
    }
    return out;
}

}  // namespace detail

struct PropagationOptions {
    /// Maximum change of the final state between a run and its twice-refined run.
    double tolerance = 1e-6;
    Index initial_substeps = 1;
    int max_refinements = 12;
};

struct PropagationReport {
    Index substeps = 0;
    double refinement_change = 0.0;
    double norm_drift = 0.0;
};

/// Solves i d/dt psi = H(t) psi on the grid with a fourth-order Magnus integrator.
/// Each grid interval is split into substeps, doubled until the final state moves
/// by less than options.tolerance.
inline Trajectory propagate(const TimeDependentGenerator& gen, const StateVector& psi0, const TimeGrid& grid,
                            const PropagationOptions& options = {}, PropagationReport* report = nullptr) {
    if (gen.dim() != psi0.dim()) {
        throw NumericError("dimension mismatch between generator and initial state");
    }
    Index substeps = std::max<Index>(1, options.initial_substeps);
    std::vector<CVector> coarse = detail::propagate_fixed(gen, psi0.amplitudes(), grid, substeps);
    double change = std::numeric_limits<double>::infinity();
    for (int r = 0; r < options.max_refinements; ++r) {
        std::vector<CVector> fine = detail::propagate_fixed(gen, psi0.amplitudes(), grid, 2 * substeps);
        change = (fine.back() - coarse.back()).norm();
        substeps *= 2;
        coarse = std::move(fine);
        if (change < options.tolerance) {
            break;
        }
    }
    if (!(change < options.tolerance)) {
        throw ConvergenceError("propagation of '" + gen.label() + "' did not converge under step refinement",
                               change, options.tolerance);
    }
    Trajectory traj{grid, {}};
    traj.states.reserve(coarse.size());
    double drift = 0.0;
    for (const auto& v : coarse) {
        drift = std::max(drift, std::abs(v.norm() - 1.0));
        traj.states.emplace_back(v);
    }
    if (report != nullptr) {
        *report = {substeps, change, drift};
    }
    return traj;
}

/// Ranges [first, first + count) of eigenvalues that coincide within a relative tolerance.
struct LevelCluster {
    Index first = 0;
    Index count = 1;

    bool operator==(const LevelCluster&) const = default;
};

inline std::vector<LevelCluster> level_clusters(const Eigen::VectorXd& eigenvalues, double tolerance) {
    const Index n = eigenvalues.size();
    const double spread = n > 0 ? eigenvalues(n - 1) - eigenvalues(0) : 0.0;
    const double tol = tolerance * std::max(1.0, std::abs(spread));
    std::vector<LevelCluster> out;
    for (Index i = 0; i < n; ++i) {
        if (!out.empty() && eigenvalues(i) - eigenvalues(i - 1) <= tol) {
            ++out.back().count;
        } else {
            out.push_back({i, 1});
        }
    }
    return out;
}

inline CMatrix cluster_projector(const Spectrum& s, const LevelCluster& c) {
    const auto v = s.eigenvectors.middleCols(c.first, c.count);
    return v * v.adjoint();
}

struct CounterdiabaticOptions {
    /// Initial finite-difference step; non-positive means 1e-4 * generator time scale.
    double dt_fd = 0.0;
    /// Allowed change (relative to max(1, |H_cd|)) when dt_fd is halved.
    double tolerance = 1e-5;
    int max_halvings = 20;
    double degeneracy_tolerance = 1e-8;
};

namespace detail {

// H_cd = i sum_c dP_c/dt P_c over spectral projectors of degenerate clusters.
// For a non-degenerate level this equals i (1 - |n><n|)|dn/dt><n| and is independent
// of the eigenvector phases; degenerate clusters are handled without special cases.
inline CMatrix counterdiabatic_fd(const TimeDependentGenerator& gen, double t, double d, const Spectrum& center,
                                  const std::vector<LevelCluster>& clusters) {
    const TimeWindow& w = gen.domain();
    std::vector<double> nodes;
    std::vector<double> weights;
    if (w.contains(t - d) && w.contains(t + d)) {
        nodes = {t - d, t + d};
        weights = {-0.5 / d, 0.5 / d};
    } else if (w.contains(t + 2.0 * d)) {
        nodes = {t, t + d, t + 2.0 * d};
        weights = {-1.5 / d, 2.0 / d, -0.5 / d};
    } else if (w.contains(t - 2.0 * d)) {
        nodes = {t - 2.0 * d, t - d, t};
        weights = {0.5 / d, -2.0 / d, 1.5 / d};
    } else {
        throw NumericError("finite-difference stencil does not fit the generator domain");
    }
    std::vector<CMatrix> center_p;
    for (const auto& c : clusters) {
        center_p.push_back(cluster_projector(center, c));
    }
    std::vector<CMatrix> dp(clusters.size(), CMatrix::Zero(gen.dim(), gen.dim()));
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const Spectrum s = nodes[j] == t ? center : eigensystem(gen(nodes[j]));
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            const CMatrix p = cluster_projector(s, clusters[c]);
            if ((p - center_p[c]).norm() > 0.5) {
                throw NumericError("level crossing inside finite-difference stencil");
            }
            dp[c] += weights[j] * p;
        }
    }
    CMatrix hcd = CMatrix::Zero(gen.dim(), gen.dim());
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        hcd += imag_unit * dp[c] * center_p[c];
    }
    return 0.5 * (hcd + hcd.adjoint());
}

}  // namespace detail

/// Counterdiabatic term for the single-parameter path traced by gen, from central
/// finite differences of the instantaneous spectral projectors (one-sided at the
/// edges of the generator's domain). dt_fd is halved until two successive results
/// agree within options.tolerance.
inline HermitianOperator counterdiabatic_term(const TimeDependentGenerator& gen, double t,
                                              const CounterdiabaticOptions& options = {}) {
    const Spectrum center = eigensystem(gen(t));
    const auto clusters = level_clusters(center.eigenvalues, options.degeneracy_tolerance);
    double d = options.dt_fd > 0.0 ? options.dt_fd : 1e-4 * gen.time_scale();

    auto attempt = [&](double step, CMatrix& out) {
        try {
            out = detail::counterdiabatic_fd(gen, t, step, center, clusters);
            return true;
        } catch (const NumericError&) {
            return false;
        }
    };

    CMatrix previous;
    bool have_previous = attempt(d, previous);
    double change = std::numeric_limits<double>::infinity();
    for (int i = 0; i < options.max_halvings; ++i) {
        d *= 0.5;
        CMatrix current;
        if (!attempt(d, current)) {
            have_previous = false;
            continue;
        }
        if (have_previous) {
            change = (current - previous).norm();
            const double scale = std::max(1.0, current.norm());
            if (change <= options.tolerance * scale) {
                return HermitianOperator(current);
            }
        }
        previous = std::move(current);
        have_previous = true;
    }
    throw ConvergenceError("counterdiabatic term did not converge at t=" + std::to_string(t), change,
                           options.tolerance);
}

/// H(t) + H_cd(t) as a generator.
inline TimeDependentGenerator counterdiabatic_generator(const TimeDependentGenerator& gen,
                                                        const CounterdiabaticOptions& options = {}) {
    return TimeDependentGenerator(
        gen.dim(), [gen, options](double t) -> CMatrix {
            return gen(t).matrix() + counterdiabatic_term(gen, t, options).matrix();
        },
        gen.label() + "+cd", gen.domain(), gen.time_scale());
}

/// Only the counterdiabatic part, -(H - (H + H_cd)) as a generator.
inline TimeDependentGenerator counterdiabatic_only(const TimeDependentGenerator& gen,
                                                   const CounterdiabaticOptions& options = {}) {
    return TimeDependentGenerator(
        gen.dim(), [gen, options](double t) -> CMatrix { return counterdiabatic_term(gen, t, options).matrix(); },
        "cd[" + gen.label() + "]", gen.domain(), gen.time_scale());
}

/// Index of the eigen-cluster containing psi, or throws if psi is not an eigenstate.
inline LevelCluster eigen_cluster_of(const Spectrum& s, const StateVector& psi, double degeneracy_tolerance = 1e-8,
                                     double overlap_tolerance = 1e-8) {
    for (const auto& c : level_clusters(s.eigenvalues, degeneracy_tolerance)) {
        const double weight = (cluster_projector(s, c) * psi.amplitudes()).squaredNorm();
        if (weight > 1.0 - overlap_tolerance) {
            return c;
        }
    }
    throw NumericError("initial state is not an instantaneous eigenstate");
}

/// sigma[H_cd(t), psi] for psi inside an instantaneous eigen-cluster c of gen(t), from
/// the spectral sum H_cd psi = i sum_{m not in c} |m><m|dH/dt|psi> / (E_c - E_m).
/// Smooth in t whenever dH/dt is, which makes it usable under adaptive quadrature.
inline double counterdiabatic_variance(const TimeDependentGenerator& gen, double t, const StateVector& psi,
                                       double degeneracy_tolerance = 1e-8) {
    const Spectrum s = eigensystem(gen(t));
    const LevelCluster level = eigen_cluster_of(s, psi, degeneracy_tolerance, 1e-6);
    const CVector dh_psi = gen.derivative(t).matrix() * psi.amplitudes();
    const double energy = s.eigenvalues.segment(level.first, level.count).mean();
    double sum = 0.0;
    for (Index m = 0; m < s.eigenvalues.size(); ++m) {
        if (m >= level.first && m < level.first + level.count) {
            continue;
        }
        const double gap = energy - s.eigenvalues(m);
        sum += std::norm(s.eigenvectors.col(m).dot(dh_psi)) / (gap * gap);
    }
    return std::sqrt(sum);
}

/// Adiabatic state: parallel transport of psi0 along its instantaneous eigenspace
/// (projection onto the eigenspace at each grid point) with the dynamical phase
/// exp(-i integral of the eigenvalue) accumulated by the trapezoidal rule.
inline Trajectory adiabatic_state(const TimeDependentGenerator& gen, const StateVector& psi0, const TimeGrid& grid,
                                  double degeneracy_tolerance = 1e-8) {
    if (gen.dim() != psi0.dim()) {
        throw NumericError("dimension mismatch between generator and initial state");
    }
    Spectrum s = eigensystem(gen(grid[0]));
    const LevelCluster level = eigen_cluster_of(s, psi0, degeneracy_tolerance);
    auto level_energy = [&](const Spectrum& sp) { return sp.eigenvalues.segment(level.first, level.count).mean(); };

    Trajectory traj{grid, {}};
    traj.states.reserve(static_cast<std::size_t>(grid.size()));
    traj.states.push_back(StateVector::normalized(cluster_projector(s, level) * psi0.amplitudes()));
    double previous_energy = level_energy(s);
    for (Index k = 1; k < grid.size(); ++k) {
        s = eigensystem(gen(grid[k]));
        const auto clusters = level_clusters(s.eigenvalues, degeneracy_tolerance);
        if (std::find(clusters.begin(), clusters.end(), level) == clusters.end()) {
            throw NumericError("gap closure along the adiabatic path at t=" + std::to_string(grid[k]));
        }
        const CVector projected = cluster_projector(s, level) * traj.states.back().amplitudes();
        if (projected.squaredNorm() < 0.5) {
            throw NumericError("eigenstate lost between grid points at t=" + std::to_string(grid[k]) +
                               "; refine the grid");
        }
        const double energy = level_energy(s);
        const Complex phase = std::exp(-imag_unit * 0.5 * (energy + previous_energy) * (grid[k] - grid[k - 1]));
        traj.states.push_back(StateVector::normalized(phase * projected));
        previous_energy = energy;
    }
    return traj;
}

}  // namespace qsl
