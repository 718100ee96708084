#pragma once

// End-to-end drivers for the three model families. Each driver propagates the
// true dynamics, builds the reference evolution and assembles a BoundTrace.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qsl/bounds.hpp"
#include "qsl/models.hpp"
#include "qsl/propagation.hpp"

namespace qsl::scenarios {

// ---------------------------------------------------------------------------
// Twisted Landau-Zener over a truncated symmetric window [-T, T]

struct TwistedLZOptions {
    /// Grid spacing; non-positive selects min(tau, 1/sqrt(v)) / resolution.
    double spacing = 0.0;
    double resolution = 40.0;
    double window_tolerance = 1e-4;
    int max_doublings = 10;
    PropagationOptions propagation;
};

struct WindowStep {
    double half_width;
    double ref_overlap;
    double evolved_overlap;
};

struct TwistedLZResult {
    models::TwistedLZParams params;
    double half_width;
    double spacing;
    std::vector<WindowStep> history;
    BoundTrace bounds;
    double majorant;
    double lz_formula;
    double ref_overlap;
    double evolved_overlap;
    PropagationReport ref_report;
    PropagationReport evolved_report;

    double theta_final() const { return bounds.theta->back(); }
};

inline double initial_half_width(const models::TwistedLZParams& p) {
    return 10.0 * std::max({p.delta / p.v, 1.0 / std::sqrt(p.v), p.tau});
}

inline double default_spacing(const models::TwistedLZParams& p, double resolution) {
    return std::min(p.tau, 1.0 / std::sqrt(p.v)) / resolution;
}

namespace detail {

struct WindowRun {
    TimeGrid grid;
    StateVector psi0;
    StateVector target;
    Trajectory ref;
    Trajectory evolved;
    PropagationReport ref_report;
    PropagationReport evolved_report;
};

// The window edges use the instantaneous LZ eigenvectors that continue (1, 0):
// the ground state at -T and the upper state at +T. Both tend to (1, 0) as T grows,
// and the finite-T mixing of order D/(vT) drops out of the measured overlap.
inline WindowRun run_window(const models::TwistedLZParams& p, double half_width, double spacing,
                            const PropagationOptions& popt) {
    const auto gen = models::twisted_lz_generator(p);
    const auto ref_gen = models::lz_reference_generator(p.delta, p.v);
    const auto n = static_cast<Index>(std::llround(2.0 * half_width / spacing)) + 1;
    TimeGrid grid(-half_width, half_width, std::max<Index>(n, 101));
    StateVector psi0 = eigensystem(ref_gen(-half_width)).eigenvector(0);
    StateVector target = eigensystem(ref_gen(half_width)).eigenvector(1);
    PropagationReport rr;
    PropagationReport er;
    Trajectory ref = propagate(ref_gen, psi0, grid, popt, &rr);
    Trajectory evolved = propagate(gen, psi0, grid, popt, &er);
    return {grid, psi0, target, std::move(ref), std::move(evolved), rr, er};
}

}  // namespace detail

/// Runs the twisted sweep against the plain LZ reference. The half-width starts at
/// 10 max(D/v, 1/sqrt(v), tau) and doubles until both final overlaps with the target
/// change by less than options.window_tolerance.
inline TwistedLZResult run_twisted_lz(const models::TwistedLZParams& p, const TwistedLZOptions& options = {}) {
    p.validate();
    const double spacing = options.spacing > 0.0 ? options.spacing : default_spacing(p, options.resolution);
    double half_width = initial_half_width(p);
    std::vector<WindowStep> history;

    auto overlaps = [](const detail::WindowRun& w) {
        return WindowStep{w.grid.end(), std::abs(w.target.inner(w.ref.back())),
                          std::abs(w.target.inner(w.evolved.back()))};
    };

    detail::WindowRun run = detail::run_window(p, half_width, spacing, options.propagation);
    history.push_back(overlaps(run));
    bool converged = false;
    for (int i = 0; i < options.max_doublings; ++i) {
        half_width *= 2.0;
        detail::WindowRun next = detail::run_window(p, half_width, spacing, options.propagation);
        const WindowStep step = overlaps(next);
        const WindowStep& prev = history.back();
        const double change =
            std::max(std::abs(step.ref_overlap - prev.ref_overlap), std::abs(step.evolved_overlap - prev.evolved_overlap));
        history.push_back(step);
        run = std::move(next);
        if (change < options.window_tolerance) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        const auto& a = history[history.size() - 2];
        const auto& b = history.back();
        throw ConvergenceError("twisted LZ window did not converge", a.ref_overlap, b.ref_overlap);
    }

    const auto gen = models::twisted_lz_generator(p);
    const auto ref_gen = models::lz_reference_generator(p.delta, p.v);
    CumulativeIntegral integral = cumulative_variance_integral(gen, ref_gen, run.ref);
    BoundTrace bounds = speed_limit_bounds(run.target, run.ref, integral, &run.evolved);
    const double majorant = models::twist_variance_majorant(p, run.grid);
    const WindowStep last = history.back();
    return {p,
            half_width,
            spacing,
            std::move(history),
            std::move(bounds),
            majorant,
            models::lz_overlap(p.delta, p.v),
            last.ref_overlap,
            last.evolved_overlap,
            run.ref_report,
            run.evolved_report};
}

// ---------------------------------------------------------------------------
// Grover search with the counterdiabatic (adiabatic-state) reference

struct GroverOptions {
    Index n_steps = 401;
    bool evolve = true;
    PropagationOptions propagation;
    CounterdiabaticOptions counterdiabatic;
    double quadrature_tolerance = 1e-8;
};

struct GroverResult {
    models::GroverParams params;
    BoundTrace bounds;
    std::vector<double> analytic_l;
    std::vector<double> analytic_u;
    double t_min_closed_form;
    std::optional<double> t_min_numeric;
    PropagationReport report;
};

/// Target |0>, initial |+>, reference = adiabatic state generated by H + H_cd.
/// The variance integral uses the spectral form of sigma[H_cd] with adaptive quadrature
/// between grid points, since steep schedules concentrate theta_dot far below the grid spacing.
inline GroverResult run_grover(const models::GroverParams& p, const GroverOptions& options = {}) {
    p.validate();
    const auto gen = models::grover_generator(p);
    const TimeGrid grid(0.0, p.t_f, options.n_steps);
    const StateVector psi0 = models::uniform_state(p.n_items);
    const StateVector target = StateVector::basis(p.n_items, 0);

    const Trajectory ref = adiabatic_state(gen, psi0, grid);
    const LevelCluster level = eigen_cluster_of(eigensystem(gen(0.0)), psi0);
    if (level.count != 1) {
        throw NumericError("Grover initial level is degenerate");
    }
    auto integrand = [&](double t) {
        return counterdiabatic_variance(gen, t, eigensystem(gen(t)).eigenvector(level.first),
                                        options.counterdiabatic.degeneracy_tolerance);
    };
    CumulativeIntegral integral = cumulative_integral_adaptive(integrand, grid, options.quadrature_tolerance);

    PropagationReport report;
    std::optional<Trajectory> evolved;
    if (options.evolve) {
        evolved = propagate(gen, psi0, grid, options.propagation, &report);
    }
    BoundTrace bounds = speed_limit_bounds(target, ref, integral, evolved ? &*evolved : nullptr);
    if (evolved) {
        bounds.std_qsl = standard_qsl(gen, *evolved);
    }

    GroverResult out{p, std::move(bounds), {}, {}, models::grover_min_time(p), std::nullopt, report};
    for (Index k = 0; k < grid.size(); ++k) {
        const auto [l, u] = models::grover_analytic_bounds(p, grid[k]);
        out.analytic_l.push_back(l);
        out.analytic_u.push_back(u);
    }
    out.t_min_numeric = first_crossing_time(grid, out.bounds.theta_l_raw, 0.0);
    return out;
}

// ---------------------------------------------------------------------------
// Periodically driven two-level system with the Floquet-Magnus reference

enum class PeriodicTarget {
    initial,  ///< psi(0)
    y_state,  ///< (1, i) / sqrt(2)
};

inline StateVector periodic_target_state(const models::PeriodicParams& p, PeriodicTarget target) {
    return target == PeriodicTarget::initial ? models::periodic_initial_state(p) : models::y_target();
}

struct PeriodicOptions {
    double periods = 10.0;
    Index n_steps = 2001;
    PropagationOptions propagation;
};

struct PeriodicResult {
    models::PeriodicParams params;
    PeriodicTarget target;
    double delta_ref;
    double h_ref;
    BoundTrace bounds;
    PropagationReport report;
};

inline PeriodicResult run_periodic(const models::PeriodicParams& p, PeriodicTarget target,
                                   const PeriodicOptions& options = {}) {
    p.validate();
    const auto gen = models::periodic_generator(p);
    const TimeGrid grid(0.0, options.periods * p.period(), options.n_steps);
    const StateVector psi0 = models::periodic_initial_state(p);
    const auto fm = models::floquet_magnus_reference(p);
    const Trajectory ref = models::constant_reference_trajectory(fm.hamiltonian, psi0, grid);
    PropagationReport report;
    const Trajectory evolved = propagate(gen, psi0, grid, options.propagation, &report);
    CumulativeIntegral integral = cumulative_variance_integral(gen, fm.generator, ref);
    BoundTrace bounds = speed_limit_bounds(periodic_target_state(p, target), ref, integral, &evolved);
    bounds.std_qsl = standard_qsl(gen, evolved);
    return {p, target, fm.delta_ref, fm.h_ref, std::move(bounds), report};
}

}  // namespace qsl::scenarios
