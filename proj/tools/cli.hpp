#pragma once

// Command-line front end. `run` is the whole program minus process setup so
// tests can drive it in-process.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "imsynth/errors.hpp"

namespace imsynth::cli {

enum ExitCode : int {
  kOk = 0,
  kValidation = 1,
  kInfeasible = 2,
  kInconclusive = 3,
  kIo = 4,
};

/// Every option of every command. Unused fields keep their defaults.
struct RunConfig {
  std::string command;
  std::optional<double> mu;
  std::optional<double> L;
  std::vector<std::string> freqs;
  std::string S;  // rows separated by ';', entries by ',' or spaces
  int ell = 1;
  double rho_lo = 0.05;
  double rho_hi = 0.9999;
  double tol = 1e-3;
  std::string harmonics = "closure";
  double structure_tol = 1e-6;
  std::string problem = "logistic";
  double a = 1.0;
  double b = 6.0;
  int p = 3;
  std::vector<int> orders{1, 2, 4, 6};
  std::vector<std::string> thetas;
  int points = 25;
  int seeds = 10;
  int steps = 400;
  int window = 100;
  int fit_window = 20;
  std::uint64_t seed = 1;
  std::optional<double> rho;
  std::string algorithm;
  std::string baseline;
  std::string out;
  std::string report;
  int workers = 1;
};

/// Raised with the full list of problems found in a RunConfig.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Problems with `cfg` for its command; empty when valid.
std::vector<std::string> validate(const RunConfig& cfg);

/// Stable "key=value" lines of the options that affect results (paths and
/// worker count excluded).
std::string canonical(const RunConfig& cfg);

std::uint64_t fnv1a64(std::string_view data);

/// "fnv1a64:" followed by 16 lowercase hex digits of canonical(cfg).
std::string config_hash(const RunConfig& cfg);

std::string version();

/// Parses argv, runs the command and returns the exit code. Messages go to
/// `out` and `err`; files named "-" are written to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace imsynth::cli
