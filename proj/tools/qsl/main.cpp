// qsl: run speed-limit scenarios from YAML configs and write plot-ready CSVs.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qsl/acceptance.hpp"
#include "qsl/errors.hpp"
#include "qsl/runner.hpp"

namespace {

constexpr const char* exit_codes = R"(Exit codes:
  0  success
  2  configuration error (unreadable file, bad YAML, missing or invalid keys)
  3  convergence failure (propagation, window doubling, finite differences)
  4  internal numeric error, or a failed selftest criterion)";

int fail(qsl::ExitCode code, const std::string& what) {
    std::fprintf(stderr, "qsl: %s\n", what.c_str());
    return static_cast<int>(code);
}

}  // namespace

int main(int argc, char** argv) {
    namespace fs = std::filesystem;
    CLI::App app{"Quantum speed-limit bounds from reference evolutions"};
    app.footer(exit_codes);
    app.require_subcommand(0, 1);

    std::string out_dir = ".";
    long long steps = 0;
    bool seed_docs = false;
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_option("--steps", steps, "Override grid.n_steps (>= 100)");
    app.add_flag("--seed-docs", seed_docs, "Write annotated example configs into --out");

    std::string config;
    auto* run = app.add_subcommand("run", "Run one scenario and write <file>.csv plus a manifest");
    run->add_option("config", config, "YAML scenario file")->required();
    auto* sweep = app.add_subcommand("sweep", "Evaluate final-time twisted LZ bounds on a parameter grid");
    sweep->add_option("config", config, "YAML scenario file with a sweep section")->required();
    unsigned threads = 0;
    sweep->add_option("--threads", threads, "Worker threads (0: all cores)");
    auto* selftest = app.add_subcommand("selftest", "Run the fast acceptance checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(qsl::ExitCode::config);
    }

    try {
        const std::optional<qsl::Index> steps_override =
            steps > 0 ? std::optional<qsl::Index>(steps) : std::nullopt;
        if (app.count("--steps") && steps < 100) {
            throw qsl::ConfigError("--steps must be at least 100");
        }
        if (seed_docs) {
            for (const auto& p : qsl::runner::write_seed_documents(out_dir)) {
                std::printf("wrote %s\n", p.string().c_str());
            }
        }
        if (*run) {
            const auto cfg = qsl::runner::load_config(config, steps_override);
            const auto out = qsl::runner::run_scenario(cfg, out_dir);
            std::printf("wrote %s\n", out.csv.string().c_str());
            for (const auto& p : out.extra) {
                std::printf("wrote %s\n", p.string().c_str());
            }
            std::printf("wrote %s\n", out.manifest.string().c_str());
        } else if (*sweep) {
            const auto cfg = qsl::runner::load_config(config, steps_override);
            const auto out = qsl::runner::run_sweep(cfg, out_dir, threads);
            std::printf("wrote %s\n", out.csv.string().c_str());
            std::printf("wrote %s\n", out.manifest.string().c_str());
        } else if (*selftest) {
            bool all = true;
            for (const auto& c : qsl::acceptance::criteria()) {
                if (!c.fast) {
                    continue;
                }
                const auto r = qsl::acceptance::run(c);
                std::printf("%s\n", qsl::acceptance::format(r).c_str());
                all = all && r.pass;
            }
            return all ? 0 : static_cast<int>(qsl::ExitCode::numeric);
        } else if (!seed_docs) {
            std::printf("%s", app.help().c_str());
        }
    } catch (const qsl::Error& e) {
        return fail(e.code(), e.what());
    } catch (const YAML::Exception& e) {
        return fail(qsl::ExitCode::config, e.what());
    } catch (const std::exception& e) {
        return fail(qsl::ExitCode::numeric, e.what());
    }
    return 0;
}
