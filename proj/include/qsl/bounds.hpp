#pragma once

// Lower and upper speed-limit bounds on the fidelity angle between an evolved
// state and a fixed target, assembled from a reference evolution:
//
//   Theta_l(t) = Theta(target, ref(t)) - I(t)  <=  Theta(target, psi(t))
//   Theta_u(t) = Theta(target, ref(t)) + I(t)  >=  Theta(target, psi(t))
//
// with I(t) the time integral of sigma[H - H_ref, ref(t')] from the start of the grid.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qsl/core.hpp"
#include "qsl/propagation.hpp"

namespace qsl {

/// Running integral on a grid; values[0] == 0 and nondecreasing.
struct CumulativeIntegral {
    TimeGrid grid;
    std::vector<double> values;

    double back() const { return values.back(); }
};

struct BoundTrace {
    TimeGrid grid;
    std::optional<std::vector<double>> theta;
    std::vector<double> theta_ref;
    std::vector<double> theta_l_raw;
    std::vector<double> theta_u_raw;
    std::vector<double> theta_l;
    std::vector<double> theta_u;
    CumulativeIntegral integral;
    std::optional<std::vector<double>> std_qsl;
};

namespace detail {

inline void check_grid(const TimeGrid& a, const TimeGrid& b, const char* where) {
    if (!(a == b)) {
        throw NumericError(std::string("grid mismatch in ") + where);
    }
}

inline CumulativeIntegral trapezoid(const TimeGrid& grid, const std::vector<double>& integrand) {
    CumulativeIntegral out{grid, std::vector<double>(integrand.size(), 0.0)};
    for (std::size_t k = 1; k < integrand.size(); ++k) {
        const double dt = grid[static_cast<Index>(k)] - grid[static_cast<Index>(k - 1)];
        out.values[k] = out.values[k - 1] + 0.5 * dt * (integrand[k] + integrand[k - 1]);
    }
    return out;
}

}  // namespace detail

/// Trapezoidal running integral of sigma[gen(t) - ref_gen(t), state(t)], where
/// state is the reference trajectory, or the evolved one when `evolved` is given.
inline CumulativeIntegral cumulative_variance_integral(const TimeDependentGenerator& gen,
                                                       const TimeDependentGenerator& ref_gen,
                                                       const Trajectory& ref_traj,
                                                       const Trajectory* evolved = nullptr) {
    if (gen.dim() != ref_gen.dim() || gen.dim() != ref_traj.back().dim()) {
        throw NumericError("dimension mismatch in cumulative_variance_integral");
    }
    const Trajectory& states = evolved != nullptr ? *evolved : ref_traj;
    detail::check_grid(ref_traj.grid, states.grid, "cumulative_variance_integral");
    const TimeGrid& grid = ref_traj.grid;
    std::vector<double> sigma(static_cast<std::size_t>(grid.size()));
    for (Index k = 0; k < grid.size(); ++k) {
        const double t = grid[k];
        sigma[static_cast<std::size_t>(k)] = variance(gen(t) - ref_gen(t), states[k]);
    }
    return detail::trapezoid(grid, sigma);
}

/// Running integral of a continuously available integrand, integrated between
/// consecutive grid points with adaptive Gauss-Kronrod quadrature. Used when the
/// reference state is known at arbitrary times (adiabatic references) and the
/// integrand has features narrower than the grid spacing.
inline CumulativeIntegral cumulative_integral_adaptive(const std::function<double(double)>& integrand,
                                                       const TimeGrid& grid, double tolerance = 1e-8) {
    CumulativeIntegral out{grid, std::vector<double>(static_cast<std::size_t>(grid.size()), 0.0)};
    for (Index k = 1; k < grid.size(); ++k) {
        const double piece = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
            integrand, grid[k - 1], grid[k], 20, tolerance);
        if (!std::isfinite(piece)) {
            throw NumericError("non-finite variance integral");
        }
        out.values[static_cast<std::size_t>(k)] = out.values[static_cast<std::size_t>(k - 1)] + piece;
    }
    return out;
}

/// Same integrand as cumulative_variance_integral with the state supplied as a
/// function of time.
inline CumulativeIntegral cumulative_variance_integral_adaptive(
    const TimeDependentGenerator& gen, const TimeDependentGenerator& ref_gen,
    const std::function<StateVector(double)>& state_at, const TimeGrid& grid, double tolerance = 1e-8) {
    if (gen.dim() != ref_gen.dim()) {
        throw NumericError("dimension mismatch in cumulative_variance_integral_adaptive");
    }
    return cumulative_integral_adaptive(
        [&](double t) { return variance(gen(t) - ref_gen(t), state_at(t)); }, grid, tolerance);
}

/// Assembles raw and clamped bounds. `evolved`, when given, fills theta.
inline BoundTrace speed_limit_bounds(const StateVector& target, const Trajectory& ref_traj,
                                     const CumulativeIntegral& integral, const Trajectory* evolved = nullptr) {
    if (target.dim() != ref_traj.back().dim()) {
        throw NumericError("dimension mismatch between target and reference");
    }
    detail::check_grid(ref_traj.grid, integral.grid, "speed_limit_bounds");
    const auto n = static_cast<std::size_t>(ref_traj.grid.size());
    BoundTrace b{ref_traj.grid, std::nullopt, {}, {}, {}, {}, {}, integral, std::nullopt};
    b.theta_ref.resize(n);
    b.theta_l_raw.resize(n);
    b.theta_u_raw.resize(n);
    b.theta_l.resize(n);
    b.theta_u.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double base = fidelity_angle(target, ref_traj.states[k]);
        b.theta_ref[k] = base;
        b.theta_l_raw[k] = base - integral.values[k];
        b.theta_u_raw[k] = base + integral.values[k];
        b.theta_l[k] = std::max(b.theta_l_raw[k], 0.0);
        b.theta_u[k] = std::min(b.theta_u_raw[k], half_pi);
    }
    if (evolved != nullptr) {
        detail::check_grid(ref_traj.grid, evolved->grid, "speed_limit_bounds");
        std::vector<double> theta(n);
        for (std::size_t k = 0; k < n; ++k) {
            theta[k] = fidelity_angle(target, evolved->states[k]);
        }
        b.theta = std::move(theta);
    }
    return b;
}

/// Mandelstam-Tamm bound: running integral of sigma[H(t), psi(t)] along the
/// evolved trajectory. Equals Theta_u with target psi(0) and H_ref = 0.
inline std::vector<double> standard_qsl(const TimeDependentGenerator& gen, const Trajectory& traj) {
    return cumulative_variance_integral(gen, TimeDependentGenerator::zero(gen.dim()), traj, &traj).values;
}

/// First time at which `values` crosses `level` (in either direction), located on
/// the piecewise-linear interpolant by bisection. Empty when no crossing occurs.
inline std::optional<double> first_crossing_time(const TimeGrid& grid, const std::vector<double>& values,
                                                 double level) {
    for (Index k = 0; k + 1 < grid.size(); ++k) {
        const double a = values[static_cast<std::size_t>(k)] - level;
        const double b = values[static_cast<std::size_t>(k + 1)] - level;
        if (a == 0.0) {
            return grid[k];
        }
        if ((a < 0.0) == (b < 0.0) && b != 0.0) {
            continue;
        }
        double lo = 0.0;
        double hi = 1.0;
        for (int i = 0; i < 60; ++i) {
            const double mid = 0.5 * (lo + hi);
            const double fm = a + mid * (b - a);
            if ((fm < 0.0) == (a < 0.0)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return grid[k] + 0.5 * (lo + hi) * (grid[k + 1] - grid[k]);
    }
    return std::nullopt;
}

}  // namespace qsl
