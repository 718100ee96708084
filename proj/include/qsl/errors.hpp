#pragma once

#include <stdexcept>
#include <string>

namespace qsl {

/// Process exit codes used by the command-line runner.
enum class ExitCode : int {
    ok = 0,
    config = 2,
    convergence = 3,
    numeric = 4,
};

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ExitCode code() const noexcept { return code_; }

  private:
    ExitCode code_;
};

class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string& what) : Error(ExitCode::config, what) {}
};

/// Raised when a refinement loop does not settle. Carries the last two estimates.
class ConvergenceError : public Error {
  public:
    ConvergenceError(const std::string& what, double coarse, double fine)
        : Error(ExitCode::convergence,
                what + " (coarse=" + std::to_string(coarse) + ", fine=" + std::to_string(fine) + ")"),
          coarse_(coarse),
          fine_(fine) {}

    double coarse() const noexcept { return coarse_; }
    double fine() const noexcept { return fine_; }

  private:
    double coarse_;
    double fine_;
};

/// Dimension mismatches, non-normalized states, NaN input and similar.
class NumericError : public Error {
  public:
    explicit NumericError(const std::string& what) : Error(ExitCode::numeric, what) {}
};

}  // namespace qsl
