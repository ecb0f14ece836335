#pragma once

// Command-line front end. Every subcommand maps onto library calls; exit
// status is 0 on success, 2 on invalid input and 3 on numerical or file
// failure.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace dyadcharge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

struct RunConfig {
  std::string command;
  std::string config_path;
  unsigned threads = 0;

  std::string input;
  std::string input2;
  std::string output;
  std::string csv;
  std::string format = "csv";

  std::string expr;
  std::vector<std::string> field_exprs;
  std::string figure = "unit";
  std::string tags = "lower";
  std::string kind = "vertex";

  int dim = 1;
  int depth = -1;
  int resolution = 6;
  int order = 4;
  int gen_lo = 2;
  int gen_hi = -1;
  double tol = 1e-6;
  std::size_t budget = 0;
  std::optional<std::uint64_t> seed;
  double gamma = 0.5;
  double beta = 0.5;
  std::vector<double> hurst{0.5};
  double q = 8.0;
  std::vector<int> q_sweep{2, 4, 6, 8};
  std::size_t ensemble = 1;
  std::optional<double> value_at_lo;
  std::optional<double> value_at_hi;
  bool roundtrip = false;
  bool check_variance = false;
  bool alexiewicz = false;
};

/// Validates parameter ranges for the selected command; throws ValidationError.
void validate(const RunConfig& cfg);

/// Runs the command; library exceptions propagate.
void dispatch(const RunConfig& cfg);

/// JSON echo of the configuration, embedded in every JSON artifact.
nlohmann::json echo(const RunConfig& cfg);

/// Parses argv (merging --config JSON beneath explicit flags), validates,
/// dispatches and maps failures to exit codes.
int run(int argc, char** argv);

}  // namespace dyadcharge::cli
