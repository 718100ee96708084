#pragma once

// Acceptance criteria as self-contained checks. Each returns a pass flag and a one-line
// summary of the measured quantities; the acceptance binary and `qsl selftest` both
// print one line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "qsl/bounds.hpp"
#include "qsl/models.hpp"
#include "qsl/optimizer.hpp"
#include "qsl/propagation.hpp"
#include "qsl/runner.hpp"
#include "qsl/scenarios.hpp"

namespace qsl::acceptance {

struct Outcome {
    bool pass;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    /// Part of the `qsl selftest` subset.
    bool fast;
    std::function<Outcome()> check;
};

struct Report {
    int id;
    std::string name;
    bool pass;
    std::string detail;
    double seconds;
};

namespace detail {

inline std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

inline std::string sci(double x) { return fmt("%.3e", x); }

// Smallest margin of theta_l_raw <= theta <= theta_u_raw over the trace.
inline double sandwich_margin(const BoundTrace& b) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < b.theta_l_raw.size(); ++k) {
        const double th = (*b.theta)[k];
        worst = std::min({worst, th - b.theta_l_raw[k], b.theta_u_raw[k] - th});
    }
    return worst;
}

inline std::vector<double> linspace_open(double hi, int n) {
    std::vector<double> out;
    for (int i = 1; i <= n; ++i) {
        out.push_back(hi * i / n);
    }
    return out;
}

inline CMatrix random_hermitian(Index d, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> g(0.0, 1.0);
    CMatrix m(d, d);
    for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < d; ++j) {
            m(i, j) = Complex(g(rng), g(rng));
        }
    }
    return 0.5 * scale * (m + m.adjoint());
}

inline StateVector random_state(Index d, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    CVector v(d);
    for (Index i = 0; i < d; ++i) {
        v(i) = Complex(g(rng), g(rng));
    }
    return StateVector::normalized(v);
}

inline const std::vector<models::TwistProtocol>& twist_protocols() {
    static const std::vector<models::TwistProtocol> p{models::TwistProtocol::tanh_step,
                                                      models::TwistProtocol::gaussian};
    return p;
}

inline scenarios::GroverOptions bounds_only() {
    scenarios::GroverOptions o;
    o.evolve = false;
    return o;
}

inline scenarios::PeriodicOptions five_periods() {
    scenarios::PeriodicOptions o;
    o.periods = 5.0;
    o.n_steps = 2001;
    return o;
}

inline double spectral_norm(const CMatrix& m) {
    return Eigen::SelfAdjointEigenSolver<CMatrix>(0.5 * (m + m.adjoint())).eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace detail

// 1 ------------------------------------------------------------------------
inline Outcome landau_zener_formula() {
    double worst = 0.0;
    for (double v : {0.5, 1.0, 2.0, 4.0}) {
        const auto r = scenarios::run_twisted_lz({1.0, v, 0.1, models::TwistProtocol::gaussian});
        worst = std::max(worst, std::abs(r.ref_overlap - r.lz_formula));
    }
    return {worst <= 1e-3, "max |overlap - exp(-pi D^2/2v)| = " + detail::sci(worst) + " (tol 1e-3)"};
}

// 2 ------------------------------------------------------------------------
inline Outcome sandwich() {
    double worst_lz = std::numeric_limits<double>::infinity();
    int runs = 0;
    for (auto proto : detail::twist_protocols()) {
        for (double v : detail::linspace_open(4.0, 20)) {
            const auto r = scenarios::run_twisted_lz({1.0, v, 0.1, proto});
            worst_lz = std::min(worst_lz, detail::sandwich_margin(r.bounds));
            ++runs;
        }
        for (double tau : detail::linspace_open(1.0, 20)) {
            const auto r = scenarios::run_twisted_lz({1.0, 2.0, tau, proto});
            worst_lz = std::min(worst_lz, detail::sandwich_margin(r.bounds));
            ++runs;
        }
    }

    std::mt19937_64 rng(20240611);
    PropagationOptions tight;
    tight.tolerance = 1e-10;
    double worst_random = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 200; ++s) {
        const Index d = 2 + s % 3;
        const CMatrix a = detail::random_hermitian(d, rng, 1.0);
        const CMatrix b = detail::random_hermitian(d, rng, 1.0);
        const CMatrix c = detail::random_hermitian(d, rng, 0.5);
        const CMatrix ra = detail::random_hermitian(d, rng, 1.0);
        const CMatrix rb = detail::random_hermitian(d, rng, 0.5);
        const double w = 1.0 + 4.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const TimeDependentGenerator gen(
            d, [a, b, c, w](double t) -> CMatrix { return a + std::cos(w * t) * b + t * c; }, "random");
        const TimeDependentGenerator ref_gen(
            d, [ra, rb](double t) -> CMatrix { return ra + std::sin(t) * rb; }, "random_reference");
        const StateVector psi0 = detail::random_state(d, rng);
        const StateVector target = detail::random_state(d, rng);
        const TimeGrid grid(0.0, 2.0, 4001);
        const Trajectory evolved = propagate(gen, psi0, grid, tight);
        const Trajectory ref = propagate(ref_gen, psi0, grid, tight);
        const BoundTrace b2 =
            speed_limit_bounds(target, ref, cumulative_variance_integral(gen, ref_gen, ref), &evolved);
        worst_random = std::min(worst_random, detail::sandwich_margin(b2));
    }
    const bool ok = worst_lz >= -2e-6 && worst_random >= -2e-6;
    return {ok, "worst margin: twisted LZ " + detail::sci(worst_lz) + " over " + std::to_string(runs) +
                    " runs, random " + detail::sci(worst_random) + " over 200 scenarios (tol 2e-6)"};
}

// 3 ------------------------------------------------------------------------
inline Outcome variance_majorant() {
    double worst = std::numeric_limits<double>::infinity();
    for (auto proto : detail::twist_protocols()) {
        for (double tau : {0.1, 0.5}) {
            for (double v : {0.5, 1.0, 2.0, 3.0, 4.0}) {
                const auto r = scenarios::run_twisted_lz({1.0, v, tau, proto});
                worst = std::min(worst, r.majorant + 1e-8 - r.bounds.integral.back());
            }
        }
    }
    return {worst >= 0.0, "min (majorant + 1e-8 - integral) = " + detail::sci(worst) + " over 20 runs"};
}

// 4 ------------------------------------------------------------------------
inline Outcome grover_closed_forms() {
    const double theta_u_oracle = 1.2490457723982544258;
    double dl = 0.0;
    double du = 0.0;
    double dconst = 0.0;
    for (auto sch : {models::Schedule::protocol1, models::Schedule::protocol2}) {
        for (double k : {1.0, 10.0, 20.0}) {
            models::GroverParams p;
            p.schedule = sch;
            p.k = k;
            const auto r = scenarios::run_grover(p, detail::bounds_only());
            for (std::size_t j = 0; j < r.analytic_l.size(); ++j) {
                dl = std::max(dl, std::abs(r.bounds.theta_l_raw[j] - r.analytic_l[j]));
                du = std::max(du, std::abs(r.bounds.theta_u_raw[j] - r.analytic_u[j]));
                dconst = std::max(dconst, std::abs(r.bounds.theta_u_raw[j] - theta_u_oracle));
            }
        }
    }
    models::GroverParams lin;
    lin.schedule = models::Schedule::linear;
    const auto r = scenarios::run_grover(lin, detail::bounds_only());
    const double t_half = 0.5 * lin.t_f;
    const double dt_numeric = r.t_min_numeric ? std::abs(*r.t_min_numeric - t_half) : INFINITY;
    const double dt_closed = std::abs(r.t_min_closed_form - t_half);
    const bool ok = dl <= 1e-4 && du <= 1e-4 && dconst <= 1e-4 && dt_numeric <= 1e-6 * lin.t_f &&
                    dt_closed <= 1e-6 * lin.t_f;
    return {ok, "max dev l " + detail::sci(dl) + ", u " + detail::sci(du) + ", |u - 1.249046| " +
                    detail::sci(dconst) + "; linear |t_min - t_f/2| numeric " + detail::sci(dt_numeric) +
                    ", closed form " + detail::sci(dt_closed)};
}

// 5 ------------------------------------------------------------------------
inline Outcome path_independence() {
    std::vector<double> finals;
    double worst_pair = 0.0;
    for (double k : {1.0, 10.0, 20.0}) {
        double pair[2];
        int i = 0;
        for (auto sch : {models::Schedule::protocol1, models::Schedule::protocol2}) {
            models::GroverParams p;
            p.schedule = sch;
            p.k = k;
            pair[i++] = scenarios::run_grover(p, detail::bounds_only()).bounds.integral.back();
        }
        worst_pair = std::max(worst_pair, std::abs(pair[0] - pair[1]));
        finals.push_back(pair[0]);
        finals.push_back(pair[1]);
    }
    const auto [lo, hi] = std::minmax_element(finals.begin(), finals.end());
    const bool ok = worst_pair <= 1e-4 && *hi - *lo <= 1e-4;
    return {ok, "protocol 1 vs 2 max diff " + detail::sci(worst_pair) + ", spread over k " + detail::sci(*hi - *lo)};
}

// 6 ------------------------------------------------------------------------
inline Outcome counterdiabatic_oracle() {
    double worst = 0.0;
    for (auto sch : {models::Schedule::protocol1, models::Schedule::protocol2}) {
        models::GroverParams p;
        p.schedule = sch;
        const auto gen = models::grover_generator(p);
        for (int j = 0; j < 20; ++j) {
            const double t = p.t_f * (j + 0.5) / 20.0;
            const CMatrix numeric = counterdiabatic_term(gen, t).matrix();
            const CMatrix exact = models::grover_cd_term(p.n_items, models::grover_theta_dot(p, t)).matrix();
            worst = std::max(worst, detail::spectral_norm(numeric - exact));
        }
    }
    return {worst <= 1e-5, "max operator-norm deviation " + detail::sci(worst) + " at 40 times (tol 1e-5)"};
}

// 7 ------------------------------------------------------------------------
inline Outcome floquet_magnus() {
    const auto fm = models::floquet_magnus_reference({1.0, 0.2, 20.0});
    const double dd = std::abs(fm.delta_ref - 0.9989);
    const double dh = std::abs(fm.h_ref + 0.01049);
    double worst = std::numeric_limits<double>::infinity();
    for (double h : {0.2, 0.8}) {
        for (auto target : {scenarios::PeriodicTarget::initial, scenarios::PeriodicTarget::y_state}) {
            const auto r = scenarios::run_periodic({1.0, h, 20.0}, target, detail::five_periods());
            worst = std::min(worst, detail::sandwich_margin(r.bounds));
        }
    }
    const bool ok = dd <= 1e-6 && dh <= 1e-6 && worst >= -2e-6;
    return {ok, "|delta_ref - 0.9989| " + detail::sci(dd) + ", |h_ref + 0.01049| " + detail::sci(dh) +
                    ", worst sandwich margin over 5 periods " + detail::sci(worst)};
}

// 8 ------------------------------------------------------------------------
inline Outcome optimizer_dominance() {
    bool dominance = true;
    bool ok = true;
    std::string detail_text;
    for (double h : {0.2, 0.8}) {
        const models::PeriodicParams p{1.0, h, 20.0};
        const StateVector psi0 = models::periodic_initial_state(p);
        const TimeGrid grid(0.0, 10.0 * p.period(), 200);
        for (auto target : {scenarios::PeriodicTarget::initial, scenarios::PeriodicTarget::y_state}) {
            const auto o = optimize_bounds(p, scenarios::periodic_target_state(p, target), psi0, grid);
            for (std::size_t k = 0; k < o.theta_u_opt.size(); ++k) {
                dominance = dominance && o.theta_u_opt[k] <= o.seed_theta_u[k] &&
                            o.theta_l_opt[k] >= o.seed_theta_l[k];
            }
            if (target == scenarios::PeriodicTarget::initial) {
                // t = 0 is excluded: every reference gives Theta_l(0) = 0 there.
                const double opt_max = *std::max_element(o.theta_l_opt.begin() + 1, o.theta_l_opt.end());
                const double seed_max = *std::max_element(o.seed_theta_l.begin() + 1, o.seed_theta_l.end());
                ok = ok && opt_max > 0.0 && seed_max < 0.0;
                detail_text += " h=" + detail::fmt("%.1f", h) + ": max opt l " + detail::sci(opt_max) +
                               ", max seed l " + detail::sci(seed_max) + ";";
            }
        }
    }
    return {ok && dominance, std::string("dominance ") + (dominance ? "holds" : "violated") + ";" + detail_text};
}

// 9 ------------------------------------------------------------------------
inline Outcome standard_qsl_consistency() {
    double reduction = 0.0;
    double worst = std::numeric_limits<double>::infinity();
    auto check = [&](const TimeDependentGenerator& gen, const Trajectory& evolved) {
        const StateVector& psi0 = evolved.states.front();
        const Trajectory still =
            models::constant_reference_trajectory(HermitianOperator::zero(gen.dim()), psi0, evolved.grid);
        const auto zero = TimeDependentGenerator::zero(gen.dim());
        const BoundTrace b =
            speed_limit_bounds(psi0, still, cumulative_variance_integral(gen, zero, still, &evolved), &evolved);
        const auto std_bound = standard_qsl(gen, evolved);
        for (std::size_t k = 0; k < std_bound.size(); ++k) {
            reduction = std::max(reduction, std::abs(b.theta_u_raw[k] - std_bound[k]));
            worst = std::min(worst, std_bound[k] + 1e-6 - (*b.theta)[k]);
        }
        return std_bound;
    };
    for (auto proto : detail::twist_protocols()) {
        const models::TwistedLZParams p{1.0, 2.0, 0.1, proto};
        const auto r = scenarios::run_twisted_lz(p);
        const auto gen = models::twisted_lz_generator(p);
        const auto ref_gen = models::lz_reference_generator(p.delta, p.v);
        check(gen, propagate(gen, eigensystem(ref_gen(r.bounds.grid.start())).eigenvector(0), r.bounds.grid));
    }
    {
        models::GroverParams p;
        const auto gen = models::grover_generator(p);
        check(gen, propagate(gen, models::uniform_state(p.n_items), TimeGrid(0.0, p.t_f, 401)));
    }
    bool ordering = true;
    std::string periodic_text;
    for (double h : {0.2, 0.8}) {
        const models::PeriodicParams p{1.0, h, 20.0};
        const auto gen = models::periodic_generator(p);
        const TimeGrid grid(0.0, 5.0 * p.period(), 2001);
        const auto std_bound = check(gen, propagate(gen, models::periodic_initial_state(p), grid));
        const auto r = scenarios::run_periodic(p, scenarios::PeriodicTarget::initial, detail::five_periods());
        const double std_max = *std::max_element(std_bound.begin(), std_bound.end());
        const double ref_max = *std::max_element(r.bounds.theta_u_raw.begin(), r.bounds.theta_u_raw.end());
        ordering = ordering && std_max > half_pi && ref_max <= half_pi;
        periodic_text += " h=" + detail::fmt("%.1f", h) + ": max std " + detail::fmt("%.4f", std_max) +
                         ", max ref u " + detail::fmt("%.4f", ref_max) + ";";
    }
    const bool ok = reduction <= 1e-12 && worst >= 0.0 && ordering;
    return {ok, "|u - std| " + detail::sci(reduction) + ", min (std + 1e-6 - theta) " + detail::sci(worst) +
                    "; within 5 periods (std must exceed pi/2, ref u must not):" + periodic_text};
}

// 10 -----------------------------------------------------------------------
inline Outcome numerics_hygiene() {
    double drift = 0.0;
    double halving = 0.0;
    {
        const models::TwistedLZParams p{1.0, 2.0, 0.1, models::TwistProtocol::gaussian};
        const auto r = scenarios::run_twisted_lz(p);
        drift = std::max({drift, r.ref_report.norm_drift, r.evolved_report.norm_drift});
        const auto g = models::twisted_lz_generator(p);
        const auto ref_gen = models::lz_reference_generator(p.delta, p.v);
        const TimeGrid coarse_grid = r.bounds.grid;
        const TimeGrid fine_grid = coarse_grid.refined(2);
        const StateVector psi0 = eigensystem(ref_gen(coarse_grid.start())).eigenvector(0);
        const StateVector target = eigensystem(ref_gen(coarse_grid.end())).eigenvector(1);
        const double a = std::abs(target.inner(propagate(g, psi0, coarse_grid).back()));
        const double b = std::abs(target.inner(propagate(g, psi0, fine_grid).back()));
        halving = std::max(halving, std::abs(a - b));
    }
    {
        models::GroverParams p;
        p.k = 10.0;
        const auto gen = models::grover_generator(p);
        const StateVector psi0 = models::uniform_state(p.n_items);
        const StateVector target = StateVector::basis(p.n_items, 0);
        PropagationReport rep;
        const TimeGrid grid(0.0, p.t_f, 401);
        const double a = std::abs(target.inner(propagate(gen, psi0, grid, {}, &rep).back()));
        const double b = std::abs(target.inner(propagate(gen, psi0, grid.refined(2)).back()));
        drift = std::max(drift, rep.norm_drift);
        halving = std::max(halving, std::abs(a - b));
    }
    {
        const models::PeriodicParams p{1.0, 0.8, 20.0};
        const auto gen = models::periodic_generator(p);
        const StateVector psi0 = models::periodic_initial_state(p);
        const StateVector target = models::y_target();
        PropagationReport rep;
        const TimeGrid grid(0.0, 10.0 * p.period(), 2001);
        const double a = std::abs(target.inner(propagate(gen, psi0, grid, {}, &rep).back()));
        const double b = std::abs(target.inner(propagate(gen, psi0, grid.refined(2)).back()));
        drift = std::max(drift, rep.norm_drift);
        halving = std::max(halving, std::abs(a - b));
    }

    namespace fs = std::filesystem;
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    const fs::path base = fs::temp_directory_path() / ("qsl_acceptance_" + std::to_string(stamp));
    bool identical = true;
    for (const auto& [name, text] : runner::seed_documents()) {
        if (name == "sweep.yaml" || name == "periodic_optimized.yaml") {
            continue;
        }
        const auto cfg = runner::parse_config(YAML::Load(text));
        const auto r1 = runner::run_scenario(cfg, base / "a");
        const auto r2 = runner::run_scenario(cfg, base / "b");
        auto slurp = [](const fs::path& f) {
            std::ifstream in(f, std::ios::binary);
            return std::string(std::istreambuf_iterator<char>(in), {});
        };
        identical = identical && slurp(r1.csv) == slurp(r2.csv) && !slurp(r1.csv).empty();
    }
    fs::remove_all(base);
    const bool ok = drift <= 1e-9 && halving <= 1e-6 && identical;
    return {ok, "norm drift " + detail::sci(drift) + ", grid-halving overlap drift " + detail::sci(halving) +
                    ", repeated CSVs " + (identical ? "identical" : "differ")};
}

inline const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> list{
        {1, "Landau-Zener formula", true, landau_zener_formula},
        {2, "bound sandwich", false, sandwich},
        {3, "variance majorant", true, variance_majorant},
        {4, "Grover closed forms", true, grover_closed_forms},
        {5, "path independence", true, path_independence},
        {6, "counterdiabatic oracle", true, counterdiabatic_oracle},
        {7, "Floquet-Magnus reference", true, floquet_magnus},
        {8, "optimizer dominance", false, optimizer_dominance},
        {9, "standard QSL consistency", true, standard_qsl_consistency},
        {10, "numerics hygiene", true, numerics_hygiene},
    };
    return list;
}

inline Report run(const Criterion& c) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
        o = c.check();
    } catch (const std::exception& e) {
        o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {c.id, c.name, o.pass, o.detail, secs};
}

inline std::string format(const Report& r) {
    char head[96];
    std::snprintf(head, sizeof head, "%s %2d %-26s (%6.1fs) ", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                  r.seconds);
    return head + r.detail;
}

}  // namespace qsl::acceptance
