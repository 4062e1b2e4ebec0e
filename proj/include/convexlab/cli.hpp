#pragma once

#include <optional>
#include <string>

#include "convexlab/envelope.hpp"
#include "convexlab/learn_test.hpp"

namespace convexlab {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kSchemaVersion = "1";

/// Exit codes: 0 accept/success, 1 reject, 2 configuration error,
/// 3 resource or solver error.
enum class ExitCode : int { ok = 0, reject = 1, config_error = 2, resource_error = 3 };

struct RunConfig {
  std::string subcommand;  // learn | test-tolerant | test-one-sided | envelope | spectrum | oracle-dconv
  std::string function_spec;
  int dimension = 1;
  double lipschitz_bound = 1.0;
  double eps = 0.5;
  double eps0 = 0.0;
  double xi = 0.05;
  double delta = 0.1;
  double c_constant = 200.0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int repetitions = 5;
  long long max_samples_cap = 2000000;
  long long max_grid_points = 2000000;
  long long learn_sample_cap = 200000;
  std::string out_path;       // hypothesis/artifact path (learn)
  std::string report_path;    // report JSON; empty = stdout
  std::string anchors_csv;    // envelope subcommand
  std::string queries_csv;    // envelope subcommand
};

struct RunReport {
  ExitCode exit_code = ExitCode::ok;
  std::string json;  // serialized ordered report
};

/// Dispatches one pipeline run and serializes the report. All errors are
/// captured into the report and the exit code; nothing throws out.
RunReport run(const RunConfig& config);

/// CSV helpers for the spec's dump formats (columns x_1..x_n,f).
std::string samples_to_csv(const std::vector<LabeledSample>& samples);
AnchorSet anchors_from_csv(const std::string& csv_text, double lipschitz_bound);
std::vector<Point> points_from_csv(const std::string& csv_text);

}  // namespace convexlab
