#pragma once

// The three scenario families: the twisted Landau-Zener sweep, the Grover search
// Hamiltonian with its counterdiabatic reference, and the periodically driven
// two-level system with a Floquet-Magnus reference.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "qsl/bounds.hpp"
#include "qsl/core.hpp"
#include "qsl/propagation.hpp"

namespace qsl::models {

using std::numbers::pi;

// ---------------------------------------------------------------------------
// Twisted Landau-Zener

enum class TwistProtocol {
    tanh_step,  ///< phi(t) = pi (1 + tanh(t / tau))
    gaussian,   ///< phi(t) = pi exp(-t^2 / tau^2)
    none,       ///< phi(t) = 0, recovers the standard sweep
};

struct TwistedLZParams {
    double delta = 1.0;
    double v = 1.0;
    double tau = 0.1;
    TwistProtocol protocol = TwistProtocol::gaussian;

    void validate() const {
        if (!(delta > 0.0) || !(v > 0.0) || !(tau > 0.0)) {
            throw NumericError("twisted LZ parameters must be strictly positive");
        }
    }
};

inline double phi_protocol(TwistProtocol kind, double tau, double t) {
    if (!(tau > 0.0)) {
        throw NumericError("twist time scale must be positive");
    }
    switch (kind) {
        case TwistProtocol::tanh_step:
            return pi * (1.0 + std::tanh(t / tau));
        case TwistProtocol::gaussian:
            return pi * std::exp(-(t * t) / (tau * tau));
        case TwistProtocol::none:
            return 0.0;
    }
    throw NumericError("unknown twist protocol");
}

inline CMatrix lz_matrix(double delta, double v, double t, double phi) {
    CMatrix h(2, 2);
    h(0, 0) = v * t;
    h(1, 1) = -v * t;
    h(0, 1) = delta * std::exp(-imag_unit * phi);
    h(1, 0) = delta * std::exp(imag_unit * phi);
    return h;
}

/// [[vt, D e^{-i phi(t)}], [D e^{i phi(t)}, -vt]]
inline TimeDependentGenerator twisted_lz_generator(const TwistedLZParams& p) {
    p.validate();
    return TimeDependentGenerator(
        2, [p](double t) { return lz_matrix(p.delta, p.v, t, phi_protocol(p.protocol, p.tau, t)); },
        "twisted_lz", {}, p.tau);
}

/// [[vt, D], [D, -vt]]
inline TimeDependentGenerator lz_reference_generator(double delta, double v) {
    if (!(delta > 0.0) || !(v > 0.0)) {
        throw NumericError("LZ parameters must be strictly positive");
    }
    return TimeDependentGenerator(
        2, [delta, v](double t) { return lz_matrix(delta, v, t, 0.0); }, "lz", {}, delta / v);
}

/// Survival amplitude exp(-pi D^2 / (2 v)).
inline double lz_overlap(double delta, double v) {
    if (!(delta > 0.0) || !(v > 0.0)) {
        throw NumericError("LZ parameters must be strictly positive");
    }
    return std::exp(-pi * delta * delta / (2.0 * v));
}

/// Trapezoidal integral of 2 D |sin(phi(t)/2)| over the window; dominates the
/// variance integral because (H - H_ref)^2 = 4 D^2 sin^2(phi/2) * identity.
inline double twist_variance_majorant(const TwistedLZParams& p, const TimeGrid& window) {
    p.validate();
    std::vector<double> f(static_cast<std::size_t>(window.size()));
    for (Index k = 0; k < window.size(); ++k) {
        f[static_cast<std::size_t>(k)] =
            2.0 * p.delta * std::abs(std::sin(0.5 * phi_protocol(p.protocol, p.tau, window[k])));
    }
    return detail::trapezoid(window, f).back();
}

// ---------------------------------------------------------------------------
// Grover search Hamiltonian

enum class Schedule {
    protocol1,  ///< logistic-type schedule
    protocol2,  ///< logarithmic schedule
    linear,     ///< s(tau) = tau exactly
};

struct GroverParams {
    Index n_items = 10;
    double a0 = 1.0;
    double t_f = 20.0;
    double k = 1.0;
    Schedule schedule = Schedule::protocol1;

    void validate() const {
        if (n_items < 2) {
            throw NumericError("Grover search needs N >= 2");
        }
        if (!(a0 > 0.0) || !(t_f > 0.0)) {
            throw NumericError("Grover A(0) and t_f must be positive");
        }
        if (!(k >= 1.0)) {
            throw NumericError("Grover schedule steepness must satisfy k >= 1");
        }
    }
};

/// Schedule s(tau) on [0, 1] with s(0) = 0, s(1) = 1.
inline double s_protocol(Schedule kind, double k, double tau) {
    if (!(k >= 1.0) || !(tau >= 0.0 && tau <= 1.0)) {
        throw NumericError("schedule requires k >= 1 and 0 <= tau <= 1");
    }
    switch (kind) {
        // Rounding can push the endpoint values past [0, 1]; A = 1 - s must not change sign.
        case Schedule::protocol1:
            return std::clamp((1.0 - std::exp(-k * tau)) /
                                  ((1.0 - std::exp(-k / 2.0)) * (1.0 + std::exp(-k * (tau - 0.5)))),
                              0.0, 1.0);
        case Schedule::protocol2: {
            const double a = std::expm1(k / 2.0);
            const double b = -std::expm1(-k / 2.0);
            return std::clamp(std::log((a * tau + 1.0) / (1.0 - b * tau)) / k, 0.0, 1.0);
        }
        case Schedule::linear:
            return tau;
    }
    throw NumericError("unknown schedule");
}

/// ds/dtau.
inline double s_protocol_derivative(Schedule kind, double k, double tau) {
    if (!(k >= 1.0) || !(tau >= 0.0 && tau <= 1.0)) {
        throw NumericError("schedule requires k >= 1 and 0 <= tau <= 1");
    }
    switch (kind) {
        case Schedule::protocol1: {
            const double c = 1.0 - std::exp(-k / 2.0);
            const double e = std::exp(-k * (tau - 0.5));
            const double num = 1.0 - std::exp(-k * tau);
            const double den = c * (1.0 + e);
            const double dnum = k * std::exp(-k * tau);
            const double dden = -c * k * e;
            return (dnum * den - num * dden) / (den * den);
        }
        case Schedule::protocol2: {
            const double a = std::expm1(k / 2.0);
            const double b = -std::expm1(-k / 2.0);
            return (a / (a * tau + 1.0) + b / (1.0 - b * tau)) / k;
        }
        case Schedule::linear:
            return 1.0;
    }
    throw NumericError("unknown schedule");
}

inline StateVector uniform_state(Index n) {
    return StateVector(CVector::Constant(n, Complex(1.0 / std::sqrt(static_cast<double>(n)), 0.0)));
}

/// (A(t), B(t)) = A(0) (1 - s, s).
inline std::pair<double, double> grover_schedule(const GroverParams& p, double t) {
    const double s = s_protocol(p.schedule, p.k, std::clamp(t / p.t_f, 0.0, 1.0));
    return {p.a0 * (1.0 - s), p.a0 * s};
}

/// A (1 - |+><+|) + B (1 - |0><0|) on the domain [0, t_f].
inline TimeDependentGenerator grover_generator(const GroverParams& p) {
    p.validate();
    const Index n = p.n_items;
    const CVector plus = uniform_state(n).amplitudes();
    const CMatrix id = CMatrix::Identity(n, n);
    const CMatrix not_plus = id - plus * plus.adjoint();
    CMatrix not_marked = id;
    not_marked(0, 0) = 0.0;
    return TimeDependentGenerator(
        n, [p, not_plus, not_marked](double t) -> CMatrix {
            const auto [a, b] = grover_schedule(p, t);
            return a * not_plus + b * not_marked;
        },
        "grover", {0.0, p.t_f}, p.t_f)
        .with_derivative([p, not_plus, not_marked](double t) -> CMatrix {
            const double sdot =
                p.a0 * s_protocol_derivative(p.schedule, p.k, std::clamp(t / p.t_f, 0.0, 1.0)) / p.t_f;
            return sdot * (not_marked - not_plus);
        });
}

/// Mixing angle: two-argument angle of ((sqrt(N-1)/N) A, ((1 - 2/N) A - B) / 2) in [0, pi].
inline double grover_theta(Index n_items, double a, double b) {
    if (n_items < 3) {
        throw NumericError("grover_theta needs N >= 3");
    }
    if (a == 0.0 && b == 0.0) {
        throw NumericError("grover_theta undefined at A = B = 0");
    }
    const double n = static_cast<double>(n_items);
    return std::atan2(std::sqrt(n - 1.0) / n * a, 0.5 * ((1.0 - 2.0 / n) * a - b));
}

inline double grover_theta_at(const GroverParams& p, double t) {
    const auto [a, b] = grover_schedule(p, t);
    return grover_theta(p.n_items, a, b);
}

/// d theta / dt along the schedule.
inline double grover_theta_dot(const GroverParams& p, double t) {
    const double n = static_cast<double>(p.n_items);
    const auto [a, b] = grover_schedule(p, t);
    const double sdot = p.a0 * s_protocol_derivative(p.schedule, p.k, std::clamp(t / p.t_f, 0.0, 1.0)) / p.t_f;
    const double adot = -sdot;
    const double bdot = sdot;
    const double y = std::sqrt(n - 1.0) / n * a;
    const double x = 0.5 * ((1.0 - 2.0 / n) * a - b);
    const double ydot = std::sqrt(n - 1.0) / n * adot;
    const double xdot = 0.5 * ((1.0 - 2.0 / n) * adot - bdot);
    return (x * ydot - y * xdot) / (x * x + y * y);
}

/// (i/2) sqrt(N/(N-1)) theta_dot (|0><+| - |+><0|)
inline HermitianOperator grover_cd_term(Index n_items, double theta_dot) {
    if (n_items < 2) {
        throw NumericError("Grover search needs N >= 2");
    }
    const double n = static_cast<double>(n_items);
    const CVector plus = uniform_state(n_items).amplitudes();
    CVector marked = CVector::Zero(n_items);
    marked(0) = 1.0;
    const CMatrix m = marked * plus.adjoint() - plus * marked.adjoint();
    return HermitianOperator(0.5 * imag_unit * std::sqrt(n / (n - 1.0)) * theta_dot * m);
}

/// Closed-form (Theta_l, Theta_u) for target |0> and the counterdiabatic reference.
inline std::pair<double, double> grover_analytic_bounds(const GroverParams& p, double t) {
    p.validate();
    const double theta0 = grover_theta_at(p, 0.0);
    const double upper = 0.5 * (pi - theta0);
    return {upper - (grover_theta_at(p, t) - theta0), upper};
}

/// Earliest t with theta(t) = (pi + theta(0)) / 2, i.e. where the closed-form lower
/// bound reaches zero.
inline double grover_min_time(const GroverParams& p) {
    p.validate();
    const double threshold = 0.5 * (pi + grover_theta_at(p, 0.0));
    auto f = [&](double t) { return grover_theta_at(p, t) - threshold; };
    constexpr int scan = 4096;
    double lo = 0.0;
    double flo = f(lo);
    for (int i = 1; i <= scan; ++i) {
        const double hi = p.t_f * static_cast<double>(i) / scan;
        const double fhi = f(hi);
        if (fhi == 0.0) {
            return hi;
        }
        if ((flo < 0.0) != (fhi < 0.0)) {
            double a = lo;
            double b = hi;
            while (b - a > 1e-9 * p.t_f) {
                const double m = 0.5 * (a + b);
                if ((f(m) < 0.0) == (flo < 0.0)) {
                    a = m;
                } else {
                    b = m;
                }
            }
            return 0.5 * (a + b);
        }
        lo = hi;
        flo = fhi;
    }
    throw NumericError("theta never reaches the minimum-time threshold within [0, t_f]");
}

// ---------------------------------------------------------------------------
// Periodically driven two-level system

struct PeriodicParams {
    double delta = 1.0;
    double h = 0.2;
    double omega = 20.0;

    void validate() const {
        if (!(delta > 0.0) || !(h > 0.0) || !(omega > 0.0)) {
            throw NumericError("periodic model parameters must be strictly positive");
        }
    }

    double period() const { return 2.0 * pi / omega; }
};

/// (1/2) [[D, h e^{-i w t}], [h e^{i w t}, -D]]
inline TimeDependentGenerator periodic_generator(const PeriodicParams& p) {
    p.validate();
    return TimeDependentGenerator(
        2, [p](double t) {
            CMatrix m(2, 2);
            m(0, 0) = 0.5 * p.delta;
            m(1, 1) = -0.5 * p.delta;
            m(0, 1) = 0.5 * p.h * std::exp(-imag_unit * p.omega * t);
            m(1, 0) = 0.5 * p.h * std::exp(imag_unit * p.omega * t);
            return m;
        },
        "periodic", {}, p.period());
}

/// (1/2) [[d, h], [h, -d]]
inline HermitianOperator two_level_hamiltonian(double delta, double h) {
    CMatrix m(2, 2);
    m << 0.5 * delta, 0.5 * h, 0.5 * h, -0.5 * delta;
    return HermitianOperator(m);
}

struct FloquetMagnusReference {
    double delta_ref;
    double h_ref;
    HermitianOperator hamiltonian;
    TimeDependentGenerator generator;
};

/// Effective time-independent Hamiltonian to second order in 1/omega.
inline FloquetMagnusReference floquet_magnus_reference(const PeriodicParams& p) {
    p.validate();
    const double d = p.delta;
    const double h = p.h;
    const double w = p.omega;
    const double delta_ref = d - h * h / (2.0 * w) - d * h * h / (w * w);
    const double h_ref = -d * h / w - d * d * h / (w * w) + h * h * h / (2.0 * w * w);
    const HermitianOperator ham = two_level_hamiltonian(delta_ref, h_ref);
    return {delta_ref, h_ref, ham, TimeDependentGenerator::constant(ham, "floquet_magnus")};
}

/// Eigenstate of H(0) with the positive eigenvalue.
inline StateVector periodic_initial_state(const PeriodicParams& p) {
    p.validate();
    return eigensystem(two_level_hamiltonian(p.delta, p.h)).eigenvector(1);
}

/// (1, i) / sqrt(2)
inline StateVector y_target() {
    CVector v(2);
    v << 1.0, imag_unit;
    return StateVector::normalized(v);
}

/// Exact solution through the rotating frame: psi(t) = R(t) exp(-i H_rot t) psi0 with
/// R(t) = diag(e^{-i w t/2}, e^{i w t/2}) and H_rot = (1/2)[[D - w, h], [h, -(D - w)]].
inline StateVector periodic_exact_state(const PeriodicParams& p, const StateVector& psi0, double t) {
    p.validate();
    const StateVector rotated = evolve_constant(two_level_hamiltonian(p.delta - p.omega, p.h), psi0, t);
    CVector v = rotated.amplitudes();
    v(0) *= std::exp(-0.5 * imag_unit * p.omega * t);
    v(1) *= std::exp(0.5 * imag_unit * p.omega * t);
    return StateVector::normalized(v);
}

/// e^{-i H t} psi0 on every grid point, in closed form.
inline Trajectory constant_reference_trajectory(const HermitianOperator& h, const StateVector& psi0,
                                                const TimeGrid& grid) {
    Trajectory traj{grid, {}};
    traj.states.reserve(static_cast<std::size_t>(grid.size()));
    for (Index k = 0; k < grid.size(); ++k) {
        traj.states.push_back(evolve_constant(h, psi0, grid[k] - grid[0]));
    }
    return traj;
}

}  // namespace qsl::models
