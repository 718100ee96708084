#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(QSL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Cli : public ::testing::Test {
  protected:
    void SetUp() override {
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        dir_ = fs::temp_directory_path() / ("qsl_cli_" + std::to_string(stamp));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(dir_ / name) << text;
        return (dir_ / name).string();
    }
    std::string out() const { return "--out " + dir_.string(); }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, HelpExitsCleanly) { EXPECT_EQ(run("--help"), 0); }

TEST_F(Cli, ConfigErrorsExitWithTwo) {
    EXPECT_EQ(run("run " + (dir_ / "missing.yaml").string()), 2);
    EXPECT_EQ(run("run " + write("bad.yaml", "scenario: [unterminated\n")), 2);
    EXPECT_EQ(run("run " + write("unknown.yaml", "scenario: grover\nmodel: {extra: 1}\n")), 2);
    EXPECT_EQ(run("--steps 10 run " + write("g.yaml", "scenario: grover\n")), 2);
    EXPECT_EQ(run("--bogus"), 2);
}

TEST_F(Cli, SeedDocsThenRun) {
    ASSERT_EQ(run("--seed-docs " + out()), 0);
    for (const char* name : {"twisted_lz.yaml", "sweep.yaml", "grover.yaml", "periodic.yaml",
                             "periodic_optimized.yaml", "custom.yaml"}) {
        EXPECT_TRUE(fs::exists(dir_ / name)) << name;
    }
    EXPECT_EQ(run(out() + " run " + (dir_ / "grover.yaml").string()), 0);
    EXPECT_TRUE(fs::exists(dir_ / "grover.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "grover.manifest.txt"));
}

TEST_F(Cli, ConvergenceFailureExitsWithThree) {
    const auto cfg = write("fast.yaml",
                           "scenario: custom\n"
                           "model:\n"
                           "  dim: 2\n"
                           "  terms:\n"
                           "    - matrix: [[0, 1], [1, 0]]\n"
                           "      coefficient: {type: cos, a: 1.0e6, omega: 1.0e9}\n"
                           "  initial: [1, 0]\n"
                           "grid: {horizon: 10, n_steps: 100}\n");
    EXPECT_EQ(run(out() + " run " + cfg), 3);
}

TEST_F(Cli, NumericFailureExitsWithFour) {
    const auto cfg = write("huge.yaml",
                           "scenario: custom\n"
                           "model:\n"
                           "  dim: 2\n"
                           "  terms:\n"
                           "    - matrix: [[1, 0], [0, -1]]\n"
                           "      coefficient: {type: linear, a: 0, b: 1.0e308}\n"
                           "  initial: [1, 1]\n"
                           "grid: {horizon: 10, n_steps: 100}\n");
    EXPECT_EQ(run(out() + " run " + cfg), 4);
}
