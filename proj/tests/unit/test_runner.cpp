#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "qsl/runner.hpp"

using namespace qsl;
using namespace qsl::runner;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    const fs::path p = fs::temp_directory_path() / ("qsl_runner_" + name + "_" + std::to_string(stamp));
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    double at(std::size_t row, const std::string& col) const {
        const auto j = static_cast<std::size_t>(std::find(header.begin(), header.end(), col) - header.begin());
        return std::stod(rows.at(row).at(j));
    }
};

Csv read_csv(const fs::path& p) {
    std::ifstream in(p);
    Csv out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::stringstream s(line);
        std::string f;
        while (std::getline(s, f, ',')) {
            fields.push_back(f);
        }
        if (!line.empty() && line.back() == ',') {
            fields.emplace_back();
        }
        (first ? out.header : out.rows.emplace_back()) = fields;
        first = false;
    }
    return out;
}

ScenarioConfig config_of(const std::string& yaml) { return parse_config(YAML::Load(yaml)); }

std::string seed(const std::string& name) {
    for (const auto& [n, text] : seed_documents()) {
        if (n == name) {
            return text;
        }
    }
    throw std::runtime_error("no seed document " + name);
}

}  // namespace

TEST(Config, SeedDocumentsParse) {
    for (const auto& [name, text] : seed_documents()) {
        EXPECT_NO_THROW(config_of(text)) << name;
    }
    EXPECT_TRUE(config_of(seed("sweep.yaml")).sweep.has_value());
}

TEST(Config, StrictValidation) {
    EXPECT_THROW(config_of("scenario: grover\nmodel: {n_items: 10, typo: 1}\n"), ConfigError);
    EXPECT_THROW(config_of("scenario: nope\n"), ConfigError);
    EXPECT_THROW(config_of("scenario: grover\ngrid: {n_steps: 99}\n"), ConfigError);
    EXPECT_THROW(config_of("scenario: grover\nmodel: {n_items: 2}\n"), ConfigError);
    EXPECT_THROW(config_of("scenario: periodic\ngrid: {periods: 2, horizon: 3}\n"), ConfigError);
    EXPECT_THROW(config_of("scenario: grover\nsweep: {}\n"), ConfigError);
    EXPECT_THROW(config_of("scenario: grover\noutput: {columns: [t, nope]}\n"), ConfigError);
    EXPECT_THROW(parse_config(YAML::Load("scenario: grover\n"), Index{50}), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/qsl.yaml"), ConfigError);
}

TEST(Config, ColumnSelectionKeepsCanonicalOrder) {
    const auto cfg = config_of("scenario: grover\noutput: {columns: [theta_u, t]}\n");
    EXPECT_EQ(cfg.columns, (std::vector<std::string>{"t", "theta_u"}));
}

TEST(Run, GroverAngleBelowConstantUpperBound) {
    const auto dir = fresh_dir("grover");
    const auto out = run_scenario(config_of(seed("grover.yaml")), dir);
    const Csv csv = read_csv(out.csv);
    EXPECT_EQ(csv.header, csv_columns());
    EXPECT_EQ(csv.rows.size(), 401U);
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        EXPECT_LE(csv.at(i, "theta"), csv.at(i, "theta_u") + 2e-6);
        EXPECT_NEAR(csv.at(i, "theta_u"), csv.at(0, "theta_u"), 1e-6);
    }
    EXPECT_TRUE(fs::exists(out.manifest));
    fs::remove_all(dir);
}

TEST(Run, PeriodicFloquetMagnusLowerBoundIsNegative) {
    const auto dir = fresh_dir("periodic");
    const auto out = run_scenario(config_of(seed("periodic.yaml")), dir);
    const Csv csv = read_csv(out.csv);
    std::size_t nonnegative = 0;
    double last_t = 0.0;
    for (std::size_t i = 1; i < csv.rows.size(); ++i) {
        if (!(csv.at(i, "theta_l_raw") < 0.0)) {
            ++nonnegative;
            last_t = csv.at(i, "t");
        }
    }
    EXPECT_EQ(nonnegative, 0U) << "theta_l_raw >= 0 up to t=" << last_t;
    fs::remove_all(dir);
}

TEST(Run, TwistedLZFinalRowInsideBounds) {
    const auto dir = fresh_dir("lz");
    const auto out = run_scenario(config_of(seed("twisted_lz.yaml")), dir);
    const Csv csv = read_csv(out.csv);
    const auto last = csv.rows.size() - 1;
    EXPECT_GE(csv.at(last, "theta"), csv.at(last, "theta_l") - 2e-6);
    EXPECT_LE(csv.at(last, "theta"), csv.at(last, "theta_u") + 2e-6);
    EXPECT_NE(slurp(out.manifest).find("window"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Run, OutputIsByteIdentical) {
    const auto a = fresh_dir("repro_a");
    const auto b = fresh_dir("repro_b");
    const auto cfg = config_of(seed("custom.yaml"));
    EXPECT_EQ(slurp(run_scenario(cfg, a).csv), slurp(run_scenario(cfg, b).csv));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Run, CustomStandardLimitColumns) {
    const auto dir = fresh_dir("custom");
    const auto cfg = config_of(
        "scenario: custom\n"
        "model:\n"
        "  dim: 2\n"
        "  terms: [{matrix: [[0, 1], [1, 0]], coefficient: {type: const, a: 0.5}}]\n"
        "  initial: [1, 0]\n"
        "grid: {horizon: 2, n_steps: 201}\n"
        "output: {file: c.csv}\n");
    const auto out = run_scenario(cfg, dir);
    const Csv csv = read_csv(out.csv);
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const double t = csv.at(i, "t");
        EXPECT_NEAR(csv.at(i, "theta"), 0.5 * t, 1e-8);
        EXPECT_NEAR(csv.at(i, "theta_u_raw"), 0.5 * t, 1e-8);
        EXPECT_NEAR(csv.at(i, "std_qsl"), 0.5 * t, 1e-8);
    }
    fs::remove_all(dir);
}

TEST(Sweep, SinglePointMatchesRun) {
    const auto dir = fresh_dir("single");
    auto cfg = config_of(
        "scenario: twisted_lz\n"
        "model: {delta_tau: 0.3, v_over_delta2: 1.5, protocol: 1}\n"
        "sweep: {delta_tau: {min: 0.3, max: 0.3, count: 1}, v_over_delta2: {min: 1.5, max: 1.5, count: 1}}\n");
    const auto rows = sweep_rows(cfg, 1);
    ASSERT_EQ(rows.size(), 1U);
    const Csv csv = read_csv(run_scenario(cfg, dir).csv);
    const auto last = csv.rows.size() - 1;
    EXPECT_EQ(rows[0].theta_final, csv.at(last, "theta"));
    EXPECT_EQ(rows[0].theta_l, csv.at(last, "theta_l"));
    EXPECT_EQ(rows[0].theta_u, csv.at(last, "theta_u"));
    fs::remove_all(dir);
}

TEST(Sweep, SandwichAndTightnessTrend) {
    const auto dir = fresh_dir("sweep");
    auto cfg = config_of(
        "scenario: twisted_lz\n"
        "model: {protocol: 2}\n"
        "sweep: {delta_tau: {min: 0.05, max: 1.0, count: 5}, v_over_delta2: {min: 0.2, max: 4.0, count: 5}}\n"
        "output: {file: s.csv}\n");
    const auto out = run_sweep(cfg, dir, 0);
    const Csv csv = read_csv(out.csv);
    EXPECT_EQ(csv.header, sweep_columns());
    ASSERT_EQ(csv.rows.size(), 25U);
    std::vector<double> tight(5, 0.0);
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        EXPECT_GE(csv.at(i, "theta_final"), csv.at(i, "theta_l") - 2e-6);
        EXPECT_LE(csv.at(i, "theta_final"), csv.at(i, "theta_u") + 2e-6);
        EXPECT_EQ(csv.at(i, "delta_tau"), cfg.sweep->delta_tau[static_cast<int>(i / 5)]);
        if (csv.at(i, "theta_u") - csv.at(i, "theta_l") < 0.5) {
            tight[i / 5] += 0.2;
        }
    }
    for (std::size_t j = 1; j < tight.size(); ++j) {
        EXPECT_GE(tight[j - 1], tight[j]) << "delta_tau column " << j;
    }
    EXPECT_GT(tight.front(), tight.back());
    fs::remove_all(dir);
}
