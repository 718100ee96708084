#pragma once

// Configuration-driven execution: YAML scenario files in, CSV tables and a plain-text
// run manifest out. Everything is dimensionless: times and energies in units of the
// gap D (twisted LZ, periodic) or of A(0) (Grover).

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "qsl/bounds.hpp"
#include "qsl/models.hpp"
#include "qsl/optimizer.hpp"
#include "qsl/propagation.hpp"
#include "qsl/scenarios.hpp"

namespace qsl::runner {

namespace fs = std::filesystem;

inline const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols{"t",           "theta",   "theta_l_raw", "theta_l",
                                               "theta_u_raw", "theta_u", "std_qsl",     "variance_integral"};
    return cols;
}

inline const std::vector<std::string>& sweep_columns() {
    static const std::vector<std::string> cols{"delta_tau", "v_over_delta2", "theta_final", "theta_l", "theta_u"};
    return cols;
}

// ---------------------------------------------------------------------------
// Configuration

struct TwistedLZConfig {
    models::TwistedLZParams params{1.0, 2.0, 0.1, models::TwistProtocol::gaussian};
    scenarios::TwistedLZOptions options;
    /// Points across the initial window; overrides options.resolution when set.
    std::optional<Index> n_steps;
};

struct GroverConfig {
    models::GroverParams params;
    Index n_steps = 401;
};

struct PeriodicConfig {
    models::PeriodicParams params;
    scenarios::PeriodicTarget target = scenarios::PeriodicTarget::initial;
    double horizon = 0.0;
    std::optional<Index> n_steps;
    OptimizerOptions optimizer;
};

enum class CoefficientKind { constant, linear, cosine, sine };

/// c(t) = a, a + b t, a cos(omega t + phase) or a sin(omega t + phase).
struct Coefficient {
    CoefficientKind kind = CoefficientKind::constant;
    double a = 1.0;
    double b = 0.0;
    double omega = 0.0;
    double phase = 0.0;

    double operator()(double t) const {
        switch (kind) {
            case CoefficientKind::constant:
                return a;
            case CoefficientKind::linear:
                return a + b * t;
            case CoefficientKind::cosine:
                return a * std::cos(omega * t + phase);
            case CoefficientKind::sine:
                return a * std::sin(omega * t + phase);
        }
        return 0.0;
    }
};

struct Term {
    CMatrix matrix;
    Coefficient coefficient;
};

struct CustomConfig {
    Index dim = 2;
    std::vector<Term> terms;
    std::vector<Term> reference;
    CVector initial;
    std::optional<CVector> target;
    double start = 0.0;
    double horizon = 1.0;
    Index n_steps = 1001;
};

struct Range {
    double min;
    double max;
    int count;

    double operator[](int i) const { return count == 1 ? min : min + (max - min) * i / (count - 1); }
};

struct SweepConfig {
    Range delta_tau{0.05, 1.0, 20};
    Range v_over_delta2{0.2, 4.0, 20};
};

enum class ScenarioKind { twisted_lz, grover, periodic, periodic_optimized, custom };

inline std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::twisted_lz:
            return "twisted_lz";
        case ScenarioKind::grover:
            return "grover";
        case ScenarioKind::periodic:
            return "periodic";
        case ScenarioKind::periodic_optimized:
            return "periodic_optimized";
        case ScenarioKind::custom:
            return "custom";
    }
    return "?";
}

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::twisted_lz;
    std::variant<TwistedLZConfig, GroverConfig, PeriodicConfig, CustomConfig> model;
    std::string output_file;
    std::vector<std::string> columns = csv_columns();
    std::optional<SweepConfig> sweep;
};

namespace detail {

inline void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
    if (!node) {
        return;
    }
    if (!node.IsMap()) {
        throw ConfigError("'" + where + "' must be a mapping");
    }
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (allowed.count(key) == 0) {
            throw ConfigError("unknown key '" + key + "' in '" + where + "'");
        }
    }
}

template <typename T>
T read(const YAML::Node& node, const std::string& key, const T& fallback) {
    if (!node || !node[key]) {
        return fallback;
    }
    try {
        return node[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("key '" + key + "' has the wrong type");
    }
}

template <typename T>
T require(const YAML::Node& node, const std::string& key, const std::string& where) {
    if (!node || !node[key]) {
        throw ConfigError("missing required key '" + key + "' in '" + where + "'");
    }
    return read<T>(node, key, T{});
}

inline double positive(double x, const std::string& name) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw ConfigError("'" + name + "' must be positive");
    }
    return x;
}

inline Index steps(long long n) {
    if (n < 100) {
        throw ConfigError("grid n_steps must be at least 100");
    }
    return static_cast<Index>(n);
}

inline Complex complex_entry(const YAML::Node& n) {
    try {
        if (n.IsSequence()) {
            if (n.size() != 2) {
                throw ConfigError("complex entries are written as [re, im]");
            }
            return {n[0].as<double>(), n[1].as<double>()};
        }
        return {n.as<double>(), 0.0};
    } catch (const YAML::Exception&) {
        throw ConfigError("matrix and vector entries must be numbers or [re, im] pairs");
    }
}

inline CVector vector_of(const YAML::Node& n, Index dim, const std::string& name) {
    if (!n || !n.IsSequence() || static_cast<Index>(n.size()) != dim) {
        throw ConfigError("'" + name + "' must be a list of " + std::to_string(dim) + " amplitudes");
    }
    CVector v(dim);
    for (Index i = 0; i < dim; ++i) {
        v(i) = complex_entry(n[static_cast<std::size_t>(i)]);
    }
    if (!(v.norm() > 0.0)) {
        throw ConfigError("'" + name + "' is the zero vector");
    }
    return v / v.norm();
}

inline std::vector<Term> terms_of(const YAML::Node& list, Index dim, const std::string& where) {
    std::vector<Term> out;
    if (!list) {
        return out;
    }
    if (!list.IsSequence()) {
        throw ConfigError("'" + where + "' must be a list of terms");
    }
    for (const auto& item : list) {
        check_keys(item, {"matrix", "coefficient"}, where);
        const YAML::Node rows = item["matrix"];
        if (!rows || !rows.IsSequence() || static_cast<Index>(rows.size()) != dim) {
            throw ConfigError("each term in '" + where + "' needs a " + std::to_string(dim) + "x" +
                              std::to_string(dim) + " matrix");
        }
        CMatrix m(dim, dim);
        for (Index i = 0; i < dim; ++i) {
            const YAML::Node row = rows[static_cast<std::size_t>(i)];
            if (!row.IsSequence() || static_cast<Index>(row.size()) != dim) {
                throw ConfigError("matrix rows in '" + where + "' must have " + std::to_string(dim) + " entries");
            }
            for (Index j = 0; j < dim; ++j) {
                m(i, j) = complex_entry(row[static_cast<std::size_t>(j)]);
            }
        }
        if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
            throw ConfigError("term matrices in '" + where + "' must be Hermitian");
        }
        Coefficient c;
        const YAML::Node cn = item["coefficient"];
        check_keys(cn, {"type", "a", "b", "omega", "phase"}, where + ".coefficient");
        const auto type = read<std::string>(cn, "type", "const");
        static const std::map<std::string, CoefficientKind> kinds{{"const", CoefficientKind::constant},
                                                                  {"linear", CoefficientKind::linear},
                                                                  {"cos", CoefficientKind::cosine},
                                                                  {"sin", CoefficientKind::sine}};
        const auto kind = kinds.find(type);
        if (kind == kinds.end()) {
            throw ConfigError("unknown coefficient type '" + type + "' (const, linear, cos, sin)");
        }
        c.kind = kind->second;
        c.a = read<double>(cn, "a", 1.0);
        c.b = read<double>(cn, "b", 0.0);
        c.omega = read<double>(cn, "omega", 0.0);
        c.phase = read<double>(cn, "phase", 0.0);
        out.push_back({m, c});
    }
    return out;
}

inline Range range_of(const YAML::Node& n, const Range& fallback, const std::string& name) {
    if (!n) {
        return fallback;
    }
    check_keys(n, {"min", "max", "count"}, "sweep." + name);
    Range r{read<double>(n, "min", fallback.min), read<double>(n, "max", fallback.max),
            read<int>(n, "count", fallback.count)};
    if (!(r.min > 0.0) || !(r.max >= r.min) || r.count < 1) {
        throw ConfigError("sweep range '" + name + "' needs 0 < min <= max and count >= 1");
    }
    return r;
}

}  // namespace detail

/// Parses a YAML scenario document. `steps_override` replaces grid.n_steps.
inline ScenarioConfig parse_config(const YAML::Node& root, std::optional<Index> steps_override = std::nullopt) {
    using detail::read;
    if (!root || !root.IsMap()) {
        throw ConfigError("configuration must be a YAML mapping");
    }
    detail::check_keys(root, {"scenario", "model", "grid", "output", "sweep"}, "top level");
    const auto name = detail::require<std::string>(root, "scenario", "top level");
    static const std::map<std::string, ScenarioKind> kinds{{"twisted_lz", ScenarioKind::twisted_lz},
                                                           {"grover", ScenarioKind::grover},
                                                           {"periodic", ScenarioKind::periodic},
                                                           {"periodic_optimized", ScenarioKind::periodic_optimized},
                                                           {"custom", ScenarioKind::custom}};
    const auto kind = kinds.find(name);
    if (kind == kinds.end()) {
        throw ConfigError("unknown scenario '" + name + "'");
    }
    ScenarioConfig cfg;
    cfg.kind = kind->second;
    const YAML::Node model = root["model"];
    const YAML::Node grid = root["grid"];
    std::optional<long long> n_steps;
    if (grid && grid["n_steps"]) {
        n_steps = read<long long>(grid, "n_steps", 0);
    }
    if (steps_override) {
        n_steps = *steps_override;
    }

    switch (cfg.kind) {
        case ScenarioKind::twisted_lz: {
            detail::check_keys(model, {"delta_tau", "v_over_delta2", "protocol"}, "model");
            detail::check_keys(grid, {"n_steps", "resolution", "window_tolerance"}, "grid");
            TwistedLZConfig c;
            c.params.tau = detail::positive(read<double>(model, "delta_tau", 0.1), "delta_tau");
            c.params.v = detail::positive(read<double>(model, "v_over_delta2", 2.0), "v_over_delta2");
            const auto protocol = read<std::string>(model, "protocol", "2");
            if (protocol == "1") {
                c.params.protocol = models::TwistProtocol::tanh_step;
            } else if (protocol == "2") {
                c.params.protocol = models::TwistProtocol::gaussian;
            } else if (protocol == "none") {
                c.params.protocol = models::TwistProtocol::none;
            } else {
                throw ConfigError("twisted_lz protocol must be 1, 2 or none");
            }
            c.options.resolution = detail::positive(read<double>(grid, "resolution", 40.0), "resolution");
            c.options.window_tolerance =
                detail::positive(read<double>(grid, "window_tolerance", 1e-4), "window_tolerance");
            if (n_steps) {
                c.n_steps = detail::steps(*n_steps);
            }
            cfg.model = c;
            break;
        }
        case ScenarioKind::grover: {
            detail::check_keys(model, {"n_items", "a0_tf", "schedule", "k"}, "model");
            detail::check_keys(grid, {"n_steps"}, "grid");
            GroverConfig c;
            c.params.n_items = read<long long>(model, "n_items", 10);
            if (c.params.n_items < 3) {
                throw ConfigError("n_items must be at least 3");
            }
            c.params.t_f = detail::positive(read<double>(model, "a0_tf", 20.0), "a0_tf");
            c.params.k = read<double>(model, "k", 1.0);
            if (!(c.params.k >= 1.0)) {
                throw ConfigError("k must be at least 1");
            }
            const auto schedule = read<std::string>(model, "schedule", "1");
            if (schedule == "1") {
                c.params.schedule = models::Schedule::protocol1;
            } else if (schedule == "2") {
                c.params.schedule = models::Schedule::protocol2;
            } else if (schedule == "linear") {
                c.params.schedule = models::Schedule::linear;
            } else {
                throw ConfigError("grover schedule must be 1, 2 or linear");
            }
            c.n_steps = n_steps ? detail::steps(*n_steps) : 401;
            cfg.model = c;
            break;
        }
        case ScenarioKind::periodic:
        case ScenarioKind::periodic_optimized: {
            const bool optimized = cfg.kind == ScenarioKind::periodic_optimized;
            std::set<std::string> keys{"h_over_delta", "omega_over_delta", "target"};
            if (optimized) {
                keys.insert({"substeps", "max_evaluations", "simplex_offset", "diameter_tolerance"});
            }
            detail::check_keys(model, keys, "model");
            detail::check_keys(grid, {"n_steps", "periods", "horizon"}, "grid");
            PeriodicConfig c;
            c.params.h = detail::positive(read<double>(model, "h_over_delta", 0.2), "h_over_delta");
            c.params.omega = detail::positive(read<double>(model, "omega_over_delta", 20.0), "omega_over_delta");
            const auto target = read<std::string>(model, "target", "psi0");
            if (target == "psi0") {
                c.target = scenarios::PeriodicTarget::initial;
            } else if (target == "y") {
                c.target = scenarios::PeriodicTarget::y_state;
            } else {
                throw ConfigError("periodic target must be psi0 or y");
            }
            if (grid && grid["periods"] && grid["horizon"]) {
                throw ConfigError("give either grid.periods or grid.horizon, not both");
            }
            c.horizon = grid && grid["horizon"]
                            ? detail::positive(read<double>(grid, "horizon", 0.0), "horizon")
                            : detail::positive(read<double>(grid, "periods", 10.0), "periods") * c.params.period();
            c.n_steps = detail::steps(n_steps.value_or(optimized ? 200 : 2001));
            if (optimized) {
                c.optimizer.substeps = read<int>(model, "substeps", c.optimizer.substeps);
                c.optimizer.search.max_evaluations =
                    read<int>(model, "max_evaluations", c.optimizer.search.max_evaluations);
                c.optimizer.simplex_offset =
                    detail::positive(read<double>(model, "simplex_offset", 0.05), "simplex_offset");
                c.optimizer.search.diameter_tolerance =
                    detail::positive(read<double>(model, "diameter_tolerance", 1e-6), "diameter_tolerance");
                if (c.optimizer.substeps < 1 || c.optimizer.search.max_evaluations < 3) {
                    throw ConfigError("substeps must be >= 1 and max_evaluations >= 3");
                }
            }
            cfg.model = c;
            break;
        }
        case ScenarioKind::custom: {
            detail::check_keys(model, {"dim", "terms", "reference", "initial", "target"}, "model");
            detail::check_keys(grid, {"n_steps", "start", "horizon"}, "grid");
            CustomConfig c;
            c.dim = detail::require<long long>(model, "dim", "model");
            if (c.dim < 2) {
                throw ConfigError("custom dim must be at least 2");
            }
            c.terms = detail::terms_of(model["terms"], c.dim, "model.terms");
            if (c.terms.empty()) {
                throw ConfigError("custom scenario needs at least one term");
            }
            c.reference = detail::terms_of(model["reference"], c.dim, "model.reference");
            c.initial = detail::vector_of(model["initial"], c.dim, "initial");
            if (model["target"]) {
                c.target = detail::vector_of(model["target"], c.dim, "target");
            }
            c.start = read<double>(grid, "start", 0.0);
            c.horizon = detail::positive(read<double>(grid, "horizon", 1.0), "horizon");
            c.n_steps = detail::steps(n_steps.value_or(1001));
            cfg.model = c;
            break;
        }
    }

    const YAML::Node output = root["output"];
    detail::check_keys(output, {"file", "columns"}, "output");
    cfg.output_file = read<std::string>(output, "file", to_string(cfg.kind) + ".csv");
    if (output && output["columns"]) {
        const auto cols = read<std::vector<std::string>>(output, "columns", {});
        for (const auto& col : cols) {
            if (std::find(csv_columns().begin(), csv_columns().end(), col) == csv_columns().end()) {
                throw ConfigError("unknown output column '" + col + "'");
            }
        }
        cfg.columns.clear();
        for (const auto& col : csv_columns()) {
            if (std::find(cols.begin(), cols.end(), col) != cols.end()) {
                cfg.columns.push_back(col);
            }
        }
    }

    if (const YAML::Node sweep = root["sweep"]) {
        if (cfg.kind != ScenarioKind::twisted_lz) {
            throw ConfigError("sweeps are defined for the twisted_lz scenario");
        }
        detail::check_keys(sweep, {"delta_tau", "v_over_delta2"}, "sweep");
        SweepConfig s;
        s.delta_tau = detail::range_of(sweep["delta_tau"], s.delta_tau, "delta_tau");
        s.v_over_delta2 = detail::range_of(sweep["v_over_delta2"], s.v_over_delta2, "v_over_delta2");
        cfg.sweep = s;
    }
    return cfg;
}

inline ScenarioConfig load_config(const fs::path& path, std::optional<Index> steps_override = std::nullopt) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(path.string());
    } catch (const YAML::BadFile&) {
        throw ConfigError("cannot read configuration file '" + path.string() + "'");
    } catch (const YAML::Exception& e) {
        throw ConfigError("YAML parse error in '" + path.string() + "': " + e.what());
    }
    return parse_config(root, steps_override);
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Columns of optional values; missing columns are written as empty fields.
struct Table {
    std::vector<std::string> header;
    std::map<std::string, std::vector<double>> columns;
    std::size_t rows = 0;

    void set(const std::string& name, std::vector<double> values) {
        rows = std::max(rows, values.size());
        columns[name] = std::move(values);
    }

    void write(const fs::path& path, const std::vector<std::string>& selection) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw ConfigError("cannot write '" + path.string() + "'");
        }
        for (std::size_t j = 0; j < selection.size(); ++j) {
            out << (j ? "," : "") << selection[j];
        }
        out << '\n';
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < selection.size(); ++j) {
                if (j) {
                    out << ',';
                }
                const auto it = columns.find(selection[j]);
                if (it != columns.end() && i < it->second.size()) {
                    out << format_number(it->second[i]);
                }
            }
            out << '\n';
        }
    }
};

/// Ordered key/value record written as "key = value" lines.
struct Manifest {
    std::vector<std::pair<std::string, std::string>> entries;

    void add(const std::string& key, const std::string& value) { entries.emplace_back(key, value); }
    void add(const std::string& key, double value) { add(key, format_number(value)); }
    void add(const std::string& key, Index value) { add(key, std::to_string(value)); }
    void add(const std::string& key, int value) { add(key, std::to_string(value)); }

    void write(const fs::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw ConfigError("cannot write '" + path.string() + "'");
        }
        for (const auto& [k, v] : entries) {
            out << k << " = " << v << '\n';
        }
    }
};

struct RunOutput {
    fs::path csv;
    fs::path manifest;
    std::vector<fs::path> extra;
    Table table;
};

namespace detail {

inline std::vector<double> times(const TimeGrid& grid) {
    std::vector<double> t(static_cast<std::size_t>(grid.size()));
    for (Index k = 0; k < grid.size(); ++k) {
        t[static_cast<std::size_t>(k)] = grid[k];
    }
    return t;
}

inline Table table_of(const BoundTrace& b) {
    Table t;
    t.header = csv_columns();
    t.set("t", times(b.grid));
    if (b.theta) {
        t.set("theta", *b.theta);
    }
    t.set("theta_l_raw", b.theta_l_raw);
    t.set("theta_l", b.theta_l);
    t.set("theta_u_raw", b.theta_u_raw);
    t.set("theta_u", b.theta_u);
    if (b.std_qsl) {
        t.set("std_qsl", *b.std_qsl);
    }
    t.set("variance_integral", b.integral.values);
    return t;
}

inline void add_grid(Manifest& m, const TimeGrid& g) {
    m.add("grid.start", g.start());
    m.add("grid.end", g.end());
    m.add("grid.n_steps", g.size());
    m.add("grid.step", g.step());
}

inline void add_report(Manifest& m, const std::string& prefix, const PropagationReport& r) {
    m.add(prefix + ".substeps", static_cast<Index>(r.substeps));
    m.add(prefix + ".refinement_change", r.refinement_change);
    m.add(prefix + ".norm_drift", r.norm_drift);
}

inline std::string protocol_name(models::TwistProtocol p) {
    switch (p) {
        case models::TwistProtocol::tanh_step:
            return "1";
        case models::TwistProtocol::gaussian:
            return "2";
        case models::TwistProtocol::none:
            return "none";
    }
    return "?";
}

inline std::string schedule_name(models::Schedule s) {
    switch (s) {
        case models::Schedule::protocol1:
            return "1";
        case models::Schedule::protocol2:
            return "2";
        case models::Schedule::linear:
            return "linear";
    }
    return "?";
}

inline scenarios::TwistedLZOptions lz_options(const TwistedLZConfig& c) {
    scenarios::TwistedLZOptions o = c.options;
    if (c.n_steps) {
        o.spacing = 2.0 * scenarios::initial_half_width(c.params) / static_cast<double>(*c.n_steps - 1);
    }
    return o;
}

inline Table run_twisted_lz(const TwistedLZConfig& c, Manifest& m) {
    const auto o = lz_options(c);
    const auto r = scenarios::run_twisted_lz(c.params, o);
    m.add("model.delta", c.params.delta);
    m.add("model.delta_tau", c.params.tau);
    m.add("model.v_over_delta2", c.params.v);
    m.add("model.protocol", protocol_name(c.params.protocol));
    m.add("window.initial_half_width", scenarios::initial_half_width(c.params));
    m.add("window.tolerance", o.window_tolerance);
    for (std::size_t i = 0; i < r.history.size(); ++i) {
        const auto& h = r.history[i];
        m.add("window.history." + std::to_string(i),
              format_number(h.half_width) + " " + format_number(h.ref_overlap) + " " +
                  format_number(h.evolved_overlap));
    }
    m.add("window.half_width", r.half_width);
    m.add("window.spacing", r.spacing);
    add_grid(m, r.bounds.grid);
    add_report(m, "propagation.reference", r.ref_report);
    add_report(m, "propagation.evolved", r.evolved_report);
    m.add("propagation.tolerance", o.propagation.tolerance);
    m.add("result.reference_overlap", r.ref_overlap);
    m.add("result.lz_formula", r.lz_formula);
    m.add("result.evolved_overlap", r.evolved_overlap);
    m.add("result.variance_majorant", r.majorant);
    return table_of(r.bounds);
}

inline Table run_grover(const GroverConfig& c, Manifest& m) {
    scenarios::GroverOptions o;
    o.n_steps = c.n_steps;
    const auto r = scenarios::run_grover(c.params, o);
    m.add("model.n_items", c.params.n_items);
    m.add("model.a0", c.params.a0);
    m.add("model.a0_tf", c.params.t_f);
    m.add("model.schedule", schedule_name(c.params.schedule));
    m.add("model.k", c.params.k);
    add_grid(m, r.bounds.grid);
    add_report(m, "propagation.evolved", r.report);
    m.add("propagation.tolerance", o.propagation.tolerance);
    m.add("quadrature.tolerance", o.quadrature_tolerance);
    m.add("result.theta0", models::grover_theta_at(c.params, 0.0));
    m.add("result.theta_u_closed_form", r.analytic_u.front());
    m.add("result.t_min_closed_form", r.t_min_closed_form);
    m.add("result.t_min_numeric", r.t_min_numeric ? format_number(*r.t_min_numeric) : std::string("none"));
    return table_of(r.bounds);
}

inline void add_periodic(Manifest& m, const PeriodicConfig& c) {
    m.add("model.delta", c.params.delta);
    m.add("model.h_over_delta", c.params.h);
    m.add("model.omega_over_delta", c.params.omega);
    m.add("model.period", c.params.period());
    m.add("model.target", c.target == scenarios::PeriodicTarget::initial ? "psi0" : "y");
    const auto fm = models::floquet_magnus_reference(c.params);
    m.add("reference.delta_ref", fm.delta_ref);
    m.add("reference.h_ref", fm.h_ref);
}

inline Table run_periodic(const PeriodicConfig& c, Manifest& m) {
    scenarios::PeriodicOptions o;
    o.periods = c.horizon / c.params.period();
    o.n_steps = *c.n_steps;
    const auto r = scenarios::run_periodic(c.params, c.target, o);
    add_periodic(m, c);
    add_grid(m, r.bounds.grid);
    add_report(m, "propagation.evolved", r.report);
    m.add("propagation.tolerance", o.propagation.tolerance);
    return table_of(r.bounds);
}

inline Table run_periodic_optimized(const PeriodicConfig& c, Manifest& m, const fs::path& stem,
                                    std::vector<fs::path>& extra, const std::vector<std::string>& columns) {
    const auto gen = models::periodic_generator(c.params);
    const TimeGrid grid(0.0, c.horizon, *c.n_steps);
    const StateVector psi0 = models::periodic_initial_state(c.params);
    const StateVector target = scenarios::periodic_target_state(c.params, c.target);
    PropagationReport report;
    const Trajectory evolved = propagate(gen, psi0, grid, {}, &report);
    const auto o = optimize_bounds(c.params, target, psi0, grid, c.optimizer);

    const auto n = static_cast<std::size_t>(grid.size());
    std::vector<double> theta(n);
    for (std::size_t k = 0; k < n; ++k) {
        theta[k] = fidelity_angle(target, evolved.states[k]);
    }
    const auto std_qsl = standard_qsl(gen, evolved);
    auto bounds_table = [&](const std::vector<double>& lower, const std::vector<double>& upper) {
        Table t;
        t.header = csv_columns();
        t.set("t", times(grid));
        t.set("theta", theta);
        t.set("theta_l_raw", lower);
        t.set("theta_u_raw", upper);
        std::vector<double> l(n);
        std::vector<double> u(n);
        for (std::size_t k = 0; k < n; ++k) {
            l[k] = std::max(lower[k], 0.0);
            u[k] = std::min(upper[k], half_pi);
        }
        t.set("theta_l", l);
        t.set("theta_u", u);
        t.set("std_qsl", std_qsl);
        return t;
    };

    Table seed = bounds_table(o.seed_theta_l, o.seed_theta_u);
    std::vector<double> seed_integral(n);
    for (std::size_t k = 0; k < n; ++k) {
        seed_integral[k] = 0.5 * (o.seed_theta_u[k] - o.seed_theta_l[k]);
    }
    seed.set("variance_integral", seed_integral);
    const fs::path seed_path = stem.string() + ".seed.csv";
    seed.write(seed_path, columns);
    extra.push_back(seed_path);

    Table params;
    params.set("t", times(grid));
    std::vector<double> du(n), hu(n), dl(n), hl(n), ev(n);
    for (std::size_t k = 0; k < n; ++k) {
        du[k] = o.argmin_u[k][0];
        hu[k] = o.argmin_u[k][1];
        dl[k] = o.argmax_l[k][0];
        hl[k] = o.argmax_l[k][1];
        ev[k] = o.evaluations[k];
    }
    params.set("delta_ref_u", du);
    params.set("h_ref_u", hu);
    params.set("delta_ref_l", dl);
    params.set("h_ref_l", hl);
    params.set("evaluations", ev);
    const fs::path params_path = stem.string() + ".params.csv";
    params.write(params_path, {"t", "delta_ref_u", "h_ref_u", "delta_ref_l", "h_ref_l", "evaluations"});
    extra.push_back(params_path);

    add_periodic(m, c);
    add_grid(m, grid);
    add_report(m, "propagation.evolved", report);
    m.add("optimizer.substeps", c.optimizer.substeps);
    m.add("optimizer.simplex_offset", c.optimizer.simplex_offset);
    m.add("optimizer.diameter_tolerance", c.optimizer.search.diameter_tolerance);
    m.add("optimizer.max_evaluations", c.optimizer.search.max_evaluations);
    long long total = 0;
    for (int e : o.evaluations) {
        total += e;
    }
    m.add("optimizer.total_evaluations", std::to_string(total));
    m.add("output.seed_csv", seed_path.filename().string());
    m.add("output.params_csv", params_path.filename().string());
    return bounds_table(o.theta_l_opt, o.theta_u_opt);
}

inline TimeDependentGenerator generator_of(const std::vector<Term>& terms, Index dim, const std::string& label) {
    if (terms.empty()) {
        return TimeDependentGenerator::zero(dim);
    }
    return TimeDependentGenerator(
        dim, [terms, dim](double t) {
            CMatrix m = CMatrix::Zero(dim, dim);
            for (const auto& term : terms) {
                m += term.coefficient(t) * term.matrix;
            }
            return m;
        },
        label);
}

inline Table run_custom(const CustomConfig& c, Manifest& m) {
    const auto gen = generator_of(c.terms, c.dim, "custom");
    const auto ref_gen = generator_of(c.reference, c.dim, "custom_reference");
    const TimeGrid grid(c.start, c.start + c.horizon, c.n_steps);
    const StateVector psi0(c.initial);
    const StateVector target(c.target.value_or(c.initial));
    PropagationReport er;
    PropagationReport rr;
    const Trajectory evolved = propagate(gen, psi0, grid, {}, &er);
    const Trajectory ref = propagate(ref_gen, psi0, grid, {}, &rr);
    const CumulativeIntegral integral = cumulative_variance_integral(gen, ref_gen, ref);
    BoundTrace b = speed_limit_bounds(target, ref, integral, &evolved);
    b.std_qsl = standard_qsl(gen, evolved);
    m.add("model.dim", c.dim);
    m.add("model.terms", static_cast<Index>(c.terms.size()));
    m.add("model.reference_terms", static_cast<Index>(c.reference.size()));
    add_grid(m, grid);
    add_report(m, "propagation.evolved", er);
    add_report(m, "propagation.reference", rr);
    return table_of(b);
}

}  // namespace detail

/// Runs one scenario, writing <out>/<file>, <out>/<stem>.manifest.txt and any
/// scenario-specific extra tables.
inline RunOutput run_scenario(const ScenarioConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const fs::path csv = out_dir / cfg.output_file;
    const fs::path stem = out_dir / fs::path(cfg.output_file).stem();
    const fs::path manifest_path = stem.string() + ".manifest.txt";
    Manifest m;
    m.add("scenario", to_string(cfg.kind));
    RunOutput out{csv, manifest_path, {}, {}};
    switch (cfg.kind) {
        case ScenarioKind::twisted_lz:
            out.table = detail::run_twisted_lz(std::get<TwistedLZConfig>(cfg.model), m);
            break;
        case ScenarioKind::grover:
            out.table = detail::run_grover(std::get<GroverConfig>(cfg.model), m);
            break;
        case ScenarioKind::periodic:
            out.table = detail::run_periodic(std::get<PeriodicConfig>(cfg.model), m);
            break;
        case ScenarioKind::periodic_optimized:
            out.table = detail::run_periodic_optimized(std::get<PeriodicConfig>(cfg.model), m, stem, out.extra,
                                                       cfg.columns);
            break;
        case ScenarioKind::custom:
            out.table = detail::run_custom(std::get<CustomConfig>(cfg.model), m);
            break;
    }
    out.table.write(csv, cfg.columns);
    m.add("output.csv", csv.filename().string());
    m.write(manifest_path);
    return out;
}

struct SweepRow {
    double delta_tau;
    double v_over_delta2;
    double theta_final;
    double theta_l;
    double theta_u;
    double half_width;
    Index n_steps;
};

/// Evaluates the twisted LZ final-time bounds on the configured (delta_tau, v) grid.
/// Rows are ordered delta_tau-major whatever order the workers finish in.
inline std::vector<SweepRow> sweep_rows(const ScenarioConfig& cfg, unsigned threads = 0) {
    if (cfg.kind != ScenarioKind::twisted_lz) {
        throw ConfigError("sweeps are defined for the twisted_lz scenario");
    }
    const SweepConfig s = cfg.sweep.value_or(SweepConfig{});
    const auto base = std::get<TwistedLZConfig>(cfg.model);
    const std::size_t total = static_cast<std::size_t>(s.delta_tau.count) * s.v_over_delta2.count;
    std::vector<SweepRow> rows(total);
    std::vector<std::exception_ptr> errors(total);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < total; i = next++) {
            try {
                TwistedLZConfig c = base;
                c.params.tau = s.delta_tau[static_cast<int>(i / s.v_over_delta2.count)];
                c.params.v = s.v_over_delta2[static_cast<int>(i % s.v_over_delta2.count)];
                const auto r = scenarios::run_twisted_lz(c.params, detail::lz_options(c));
                rows[i] = {c.params.tau,         c.params.v,   r.theta_final(),        r.bounds.theta_l.back(),
                           r.bounds.theta_u.back(), r.half_width, r.bounds.grid.size()};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < std::min<std::size_t>(threads, total); ++t) {
        pool.emplace_back(work);
    }
    work();
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return rows;
}

inline RunOutput run_sweep(const ScenarioConfig& cfg, const fs::path& out_dir, unsigned threads = 0) {
    fs::create_directories(out_dir);
    const auto rows = sweep_rows(cfg, threads);
    const fs::path csv = out_dir / cfg.output_file;
    const fs::path stem = out_dir / fs::path(cfg.output_file).stem();
    Table t;
    t.header = sweep_columns();
    std::vector<double> a, b, c, d, e;
    Manifest m;
    m.add("scenario", std::string("twisted_lz sweep"));
    const auto& base = std::get<TwistedLZConfig>(cfg.model);
    const SweepConfig s = cfg.sweep.value_or(SweepConfig{});
    m.add("model.protocol", detail::protocol_name(base.params.protocol));
    m.add("sweep.delta_tau", format_number(s.delta_tau.min) + " " + format_number(s.delta_tau.max) + " " +
                                 std::to_string(s.delta_tau.count));
    m.add("sweep.v_over_delta2", format_number(s.v_over_delta2.min) + " " + format_number(s.v_over_delta2.max) +
                                     " " + std::to_string(s.v_over_delta2.count));
    m.add("grid.resolution", base.options.resolution);
    m.add("window.tolerance", base.options.window_tolerance);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        a.push_back(r.delta_tau);
        b.push_back(r.v_over_delta2);
        c.push_back(r.theta_final);
        d.push_back(r.theta_l);
        e.push_back(r.theta_u);
        m.add("row." + std::to_string(i) + ".half_width", r.half_width);
        m.add("row." + std::to_string(i) + ".n_steps", r.n_steps);
    }
    t.set("delta_tau", a);
    t.set("v_over_delta2", b);
    t.set("theta_final", c);
    t.set("theta_l", d);
    t.set("theta_u", e);
    t.write(csv, sweep_columns());
    const fs::path manifest_path = stem.string() + ".manifest.txt";
    m.add("output.csv", csv.filename().string());
    m.write(manifest_path);
    return {csv, manifest_path, {}, std::move(t)};
}

// ---------------------------------------------------------------------------
// Annotated example configurations

inline const std::vector<std::pair<std::string, std::string>>& seed_documents() {
    static const std::vector<std::pair<std::string, std::string>> docs{
        {"twisted_lz.yaml", R"(# Twisted Landau-Zener sweep, H = [[vt, D e^{-i phi}], [D e^{i phi}, -vt]].
# Units of D: delta_tau = D tau, v_over_delta2 = v / D^2.
scenario: twisted_lz
model:
  delta_tau: 0.1
  v_over_delta2: 2.0
  protocol: 2            # 1: phi = pi (1 + tanh(t/tau)), 2: phi = pi exp(-t^2/tau^2), none
grid:
  resolution: 40         # points per min(tau, 1/sqrt(v)); the window [-T, T] is chosen automatically
  # n_steps: 4001        # alternative: points across the initial window
  window_tolerance: 1.0e-4
output:
  file: twisted_lz.csv
)"},
        {"sweep.yaml", R"(# Final-time bounds for the twisted LZ model on a uniform (delta_tau, v/D^2) grid.
# Run with: qsl sweep sweep.yaml
scenario: twisted_lz
model:
  protocol: 2
grid:
  resolution: 40
sweep:
  delta_tau: {min: 0.05, max: 1.0, count: 20}
  v_over_delta2: {min: 0.2, max: 4.0, count: 20}
output:
  file: sweep.csv
)"},
        {"grover.yaml", R"(# Grover search, H = A (1 - |+><+|) + B (1 - |0><0|), target |0>.
# Units of A(0): a0_tf = A(0) t_f.
scenario: grover
model:
  n_items: 10
  a0_tf: 20
  schedule: 1            # 1, 2 or linear
  k: 1
grid:
  n_steps: 401
output:
  file: grover.csv
)"},
        {"periodic.yaml", R"(# Driven two-level system, H = (1/2)[[D, h e^{-iwt}], [h e^{iwt}, -D]],
# bounded with the constant Floquet-Magnus reference.
scenario: periodic
model:
  h_over_delta: 0.2
  omega_over_delta: 20
  target: psi0           # psi0 or y for (1, i)/sqrt(2)
grid:
  periods: 10            # or horizon: <D t>
  n_steps: 2001
output:
  file: periodic.csv
)"},
        {"periodic_optimized.yaml", R"(# Same model with (delta_ref, h_ref) optimized at every grid time.
# Also writes <stem>.seed.csv (Floquet-Magnus bounds) and <stem>.params.csv (optimal references).
scenario: periodic_optimized
model:
  h_over_delta: 0.8
  omega_over_delta: 20
  target: psi0
  substeps: 32           # trapezoid sub-intervals per grid interval
  max_evaluations: 500
  simplex_offset: 0.05
  diameter_tolerance: 1.0e-6
grid:
  periods: 10
  n_steps: 200
output:
  file: periodic_optimized.csv
)"},
        {"custom.yaml", R"(# Any sum of constant Hermitian matrices times c(t); entries are numbers or [re, im].
# Coefficients: const (a), linear (a + b t), cos / sin (a cos(omega t + phase)).
# The reference defaults to H_ref = 0, which gives the standard speed limit.
scenario: custom
model:
  dim: 2
  terms:
    - matrix: [[1, 0], [0, -1]]
      coefficient: {type: linear, a: 0, b: 0.5}
    - matrix: [[0, 1], [1, 0]]
      coefficient: {type: const, a: 0.5}
  reference:
    - matrix: [[0, 1], [1, 0]]
      coefficient: {type: const, a: 0.5}
  initial: [1, 0]
  target: [[0.70710678118654752, 0], [0, 0.70710678118654752]]
grid:
  start: 0
  horizon: 5
  n_steps: 1001
output:
  file: custom.csv
)"},
    };
    return docs;
}

inline std::vector<fs::path> write_seed_documents(const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::vector<fs::path> out;
    for (const auto& [name, text] : seed_documents()) {
        const fs::path p = out_dir / name;
        std::ofstream f(p, std::ios::binary);
        if (!f) {
            throw ConfigError("cannot write '" + p.string() + "'");
        }
        f << text;
        out.push_back(p);
    }
    return out;
}

}  // namespace qsl::runner
