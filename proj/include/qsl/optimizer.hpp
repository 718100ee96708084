#pragma once

// Per-time optimization of a constant two-level reference (delta_ref, h_ref) for the
// periodically driven model: at each grid time, Theta_u is minimized and Theta_l is
// maximized by two independent Nelder-Mead searches, warm-started along the grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "qsl/core.hpp"
#include "qsl/models.hpp"
#include "qsl/propagation.hpp"

namespace qsl {

using Point2 = std::array<double, 2>;

struct NelderMeadOptions {
    double diameter_tolerance = 1e-6;
    int max_evaluations = 500;
};

struct NelderMeadResult {
    Point2 best;
    double value;
    int evaluations;
    /// Best value after each iteration.
    std::vector<double> history;
};

/// Downhill simplex in two dimensions. Non-finite objective values are treated as +inf,
/// so such candidates are never accepted.
inline NelderMeadResult nelder_mead(const std::function<double(const Point2&)>& f, const Point2& start,
                                    const Point2& offsets, const NelderMeadOptions& options = {}) {
    int evaluations = 0;
    auto eval = [&](const Point2& x) {
        ++evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    std::array<Point2, 3> x{start, Point2{start[0] + offsets[0], start[1]}, Point2{start[0], start[1] + offsets[1]}};
    std::array<double, 3> fx{eval(x[0]), eval(x[1]), eval(x[2])};

    auto diameter = [&] {
        double d = 0.0;
        for (int i = 0; i < 3; ++i) {
            for (int j = i + 1; j < 3; ++j) {
                d = std::max(d, std::hypot(x[i][0] - x[j][0], x[i][1] - x[j][1]));
            }
        }
        return d;
    };
    auto order = [&] {
        std::array<int, 3> idx{0, 1, 2};
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return fx[a] < fx[b]; });
        const auto xs = x;
        const auto fs = fx;
        for (int i = 0; i < 3; ++i) {
            x[i] = xs[idx[i]];
            fx[i] = fs[idx[i]];
        }
    };
    auto along = [](const Point2& c, const Point2& w, double s) {
        return Point2{c[0] + s * (w[0] - c[0]), c[1] + s * (w[1] - c[1])};
    };

    std::vector<double> history;
    order();
    history.push_back(fx[0]);
    while (evaluations < options.max_evaluations && diameter() >= options.diameter_tolerance) {
        const Point2 c{0.5 * (x[0][0] + x[1][0]), 0.5 * (x[0][1] + x[1][1])};
        const Point2 r = along(c, x[2], -1.0);
        const double fr = eval(r);
        if (fr < fx[0]) {
            const Point2 e = along(c, x[2], -2.0);
            const double fe = eval(e);
            if (fe < fr) {
                x[2] = e;
                fx[2] = fe;
            } else {
                x[2] = r;
                fx[2] = fr;
            }
        } else if (fr < fx[1]) {
            x[2] = r;
            fx[2] = fr;
        } else {
            const bool outside = fr < fx[2];
            const Point2 k = outside ? along(c, x[2], -0.5) : along(c, x[2], 0.5);
            const double fk = eval(k);
            if (fk <= (outside ? fr : fx[2])) {
                x[2] = k;
                fx[2] = fk;
            } else {
                for (int i = 1; i < 3; ++i) {
                    x[i] = along(x[0], x[i], 0.5);
                    fx[i] = eval(x[i]);
                }
            }
        }
        order();
        history.push_back(fx[0]);
    }
    return {x[0], fx[0], evaluations, std::move(history)};
}

struct OptimizerOptions {
    /// Trapezoid sub-intervals per grid interval for the variance integral.
    int substeps = 32;
    /// Initial simplex offset in units of delta.
    double simplex_offset = 0.05;
    NelderMeadOptions search;
    std::size_t max_cache_entries = 1 << 14;
};

struct OptimizedBoundTrace {
    TimeGrid grid;
    std::vector<double> theta_u_opt;
    std::vector<double> theta_l_opt;
    std::vector<Point2> argmin_u;
    std::vector<Point2> argmax_l;
    std::vector<int> evaluations;
    /// Floquet-Magnus seed bounds from the same objective.
    std::vector<double> seed_theta_u;
    std::vector<double> seed_theta_l;
};

namespace detail {

using Bloch = std::array<double, 3>;

inline Bloch bloch_vector(const StateVector& psi) {
    const Complex c = std::conj(psi[0]) * psi[1];
    return {2.0 * c.real(), 2.0 * c.imag(), std::norm(psi[0]) - std::norm(psi[1])};
}

inline double dot(const Bloch& a, const Bloch& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

// Bloch vector of exp(-i t (d sz + h sx)/2) psi0: rotation by angle t sqrt(d^2 + h^2).
inline Bloch rotate(const Bloch& n, double d, double h, double t) {
    const double omega = std::hypot(d, h);
    if (omega == 0.0) {
        return n;
    }
    const Bloch m{h / omega, 0.0, d / omega};
    const double phi = omega * t;
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    const Bloch cross{m[1] * n[2] - m[2] * n[1], m[2] * n[0] - m[0] * n[2], m[0] * n[1] - m[1] * n[0]};
    const double mn = dot(m, n);
    return {n[0] * c + cross[0] * s + m[0] * mn * (1.0 - c), n[1] * c + cross[1] * s + m[1] * mn * (1.0 - c),
            n[2] * c + cross[2] * s + m[2] * mn * (1.0 - c)};
}

// Theta between pure qubit states from their Bloch vectors.
inline double bloch_angle(const Bloch& a, const Bloch& b) {
    return std::acos(std::sqrt(std::clamp(0.5 * (1.0 + dot(a, b)), 0.0, 1.0)));
}

// Running integral and reference angle for one candidate, extended on demand.
struct CandidateCurve {
    std::vector<double> integral;
    std::vector<double> theta_ref;
};

class ReferenceObjective {
  public:
    ReferenceObjective(const models::PeriodicParams& p, const StateVector& target, const StateVector& psi0,
                       const TimeGrid& grid, const OptimizerOptions& options)
        : p_(p), target_(bloch_vector(target)), psi0_(bloch_vector(psi0)), grid_(grid), options_(options) {}

    /// Theta(target, ref(t_k)) and the variance integral up to t_k for the candidate.
    std::pair<double, double> at(const Point2& candidate, Index k) {
        const std::lock_guard<std::mutex> lock(mutex_);
        const auto key = std::make_pair(std::llround(candidate[0] * 1e12), std::llround(candidate[1] * 1e12));
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            if (cache_.size() >= options_.max_cache_entries) {
                cache_.clear();
            }
            it = cache_.emplace(key, CandidateCurve{}).first;
        }
        extend(it->second, candidate, k);
        const auto i = static_cast<std::size_t>(k);
        return {it->second.theta_ref[i], it->second.integral[i]};
    }

  private:
    // sigma[H(t) - H_ref, ref(t)] with H - H_ref = a . sigma_vec: sigma^2 = |a|^2 - (a . n)^2.
    double sigma(const Point2& c, double t) const {
        const Bloch n = rotate(psi0_, c[0], c[1], t - grid_[0]);
        const Bloch a{0.5 * (p_.h * std::cos(p_.omega * t) - c[1]), 0.5 * p_.h * std::sin(p_.omega * t),
                      0.5 * (p_.delta - c[0])};
        const double an = dot(a, n);
        return std::sqrt(std::max(dot(a, a) - an * an, 0.0));
    }

    void extend(CandidateCurve& curve, const Point2& c, Index k) const {
        if (curve.integral.empty()) {
            curve.integral.push_back(0.0);
            curve.theta_ref.push_back(bloch_angle(target_, psi0_));
        }
        const int m = options_.substeps;
        for (auto j = static_cast<Index>(curve.integral.size()); j <= k; ++j) {
            const double a = grid_[j - 1];
            const double h = (grid_[j] - a) / m;
            double sum = 0.5 * (sigma(c, a) + sigma(c, grid_[j]));
            for (int i = 1; i < m; ++i) {
                sum += sigma(c, a + i * h);
            }
            curve.integral.push_back(curve.integral.back() + h * sum);
            curve.theta_ref.push_back(bloch_angle(target_, rotate(psi0_, c[0], c[1], grid_[j] - grid_[0])));
        }
    }

    models::PeriodicParams p_;
    Bloch target_;
    Bloch psi0_;
    TimeGrid grid_;
    OptimizerOptions options_;
    std::map<std::pair<long long, long long>, CandidateCurve> cache_;
    std::mutex mutex_;
};

}  // namespace detail

/// Raw seed-style bounds for a fixed constant reference (delta_ref, h_ref), computed
/// with the optimizer's objective.
inline std::pair<std::vector<double>, std::vector<double>> constant_reference_bounds(
    const models::PeriodicParams& p, const StateVector& target, const StateVector& psi0, const TimeGrid& grid,
    const Point2& reference, const OptimizerOptions& options = {}) {
    detail::ReferenceObjective objective(p, target, psi0, grid, options);
    std::vector<double> lower;
    std::vector<double> upper;
    for (Index k = 0; k < grid.size(); ++k) {
        const auto [theta_ref, integral] = objective.at(reference, k);
        lower.push_back(theta_ref - integral);
        upper.push_back(theta_ref + integral);
    }
    return {std::move(lower), std::move(upper)};
}

/// Minimizes Theta_u and maximizes Theta_l at every grid time over constant references.
/// The Floquet-Magnus values seed the first search and remain a candidate everywhere,
/// so the result never falls behind the seed.
inline OptimizedBoundTrace optimize_bounds(const models::PeriodicParams& p, const StateVector& target,
                                           const StateVector& psi0, const TimeGrid& grid,
                                           const OptimizerOptions& options = {}) {
    p.validate();
    if (target.dim() != 2 || psi0.dim() != 2) {
        throw NumericError("reference optimization is defined for two-level states");
    }
    const auto fm = models::floquet_magnus_reference(p);
    const Point2 seed{fm.delta_ref, fm.h_ref};
    const Point2 offsets{options.simplex_offset * p.delta, options.simplex_offset * p.delta};
    detail::ReferenceObjective objective(p, target, psi0, grid, options);

    OptimizedBoundTrace out{grid, {}, {}, {}, {}, {}, {}, {}};
    Point2 start_u = seed;
    Point2 start_l = seed;
    for (Index k = 0; k < grid.size(); ++k) {
        auto upper = [&](const Point2& c) {
            const auto [theta_ref, integral] = objective.at(c, k);
            return theta_ref + integral;
        };
        auto lower = [&](const Point2& c) {
            const auto [theta_ref, integral] = objective.at(c, k);
            return -(theta_ref - integral);
        };
        const double seed_u = upper(seed);
        const double seed_l = -lower(seed);
        NelderMeadResult ru = nelder_mead(upper, start_u, offsets, options.search);
        NelderMeadResult rl = nelder_mead(lower, start_l, offsets, options.search);
        if (!std::isfinite(ru.value) || !std::isfinite(rl.value)) {
            throw NumericError("reference optimization failed at t=" + std::to_string(grid[k]) +
                               " (seed delta_ref=" + std::to_string(seed[0]) + ", h_ref=" + std::to_string(seed[1]) +
                               ")");
        }
        if (seed_u < ru.value) {
            ru.best = seed;
            ru.value = seed_u;
        }
        if (-seed_l < rl.value) {
            rl.best = seed;
            rl.value = -seed_l;
        }
        out.theta_u_opt.push_back(ru.value);
        out.theta_l_opt.push_back(-rl.value);
        out.argmin_u.push_back(ru.best);
        out.argmax_l.push_back(rl.best);
        out.evaluations.push_back(ru.evaluations + rl.evaluations);
        out.seed_theta_u.push_back(seed_u);
        out.seed_theta_l.push_back(seed_l);
        start_u = ru.best;
        start_l = rl.best;
    }
    return out;
}

}  // namespace qsl
