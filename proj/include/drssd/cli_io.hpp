#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "drssd/conic_program.hpp"
#include "drssd/model.hpp"
#include "drssd/report.hpp"
#include "drssd/upper_bound.hpp"

namespace drssd::cli {

inline constexpr const char* kConfigSchema = "drssd-config/1";
inline constexpr const char* kReportSchema = "drssd-report/1";

/// How return values in scenario files are written. Percent values are
/// divided by 100 on load (and the ball radius with them), so every model
/// runs on fractions.
enum class Units { kFraction, kPercent };

Units parse_units(const std::string& s);
std::string to_string(Units units);

/// Scenario matrix, rows = observations, columns = assets. Comma separated,
/// optional header row. Throws ParseError("no data rows"), ParseError naming
/// the row for ragged rows and the row and column for bad cells.
MatrixXd parse_returns_csv(std::istream& in, bool has_header, Units units);
MatrixXd load_returns_csv(const std::string& path, bool has_header, Units units);

struct LowerSettings {
  bool enabled = true;
  int n_xi = 40;
  int n_eta = 40;
  GridMode mode = GridMode::kGrid;
  std::uint64_t seed = 0;
  bool cutting_plane = false;
  int max_iter = 100000;
  int batch = 1;
};

struct UpperSettings {
  bool enabled = true;
  int K = 1;
  std::optional<VectorXd> start;  // benchmark when empty
  int max_iter = 100;
  double tol = 1e-6;
  FixedZObjective fixed_z_objective = FixedZObjective::kZero;
};

enum class SweepKind { kNone, kEpsilons, kSizes, kIntervals };

SweepKind parse_sweep_kind(const std::string& s);
std::string to_string(SweepKind kind);

struct SweepSettings {
  SweepKind kind = SweepKind::kNone;
  std::vector<double> epsilons;
  std::vector<std::pair<int, int>> sizes;  // (n_xi, n_eta)
  std::vector<int> intervals;
  int threads = 1;
};

struct OutputSettings {
  std::string dir = ".";
  std::string report = "report.json";
  std::string table = "results.csv";
};

struct RunConfig {
  std::string name;
  SsdInstance instance;
  Units units = Units::kFraction;
  LowerSettings lower;
  UpperSettings upper;
  bool classic = false;
  SolverSettings solver;
  SweepSettings sweep;
  OutputSettings output;
  nlohmann::json echo;  // the config as read
};

/// Builds a config from parsed JSON. Relative file paths resolve against
/// `base_dir`. Throws ConfigError (and ParseError for scenario files).
RunConfig parse_config(const nlohmann::json& j, const std::string& base_dir = ".",
                       std::optional<Units> units_override = std::nullopt);
/// Throws ConfigError naming the path when the file is missing or unreadable.
RunConfig load_config(const std::string& path,
                      std::optional<Units> units_override = std::nullopt);

/// |(upper - lower) / lower|.
double relative_gap(double lower, double upper);

struct RunReport {
  std::string command;
  std::optional<BoundReport> lower;
  std::optional<BoundReport> upper;
  std::optional<BoundReport> classic;
  std::optional<double> gap;   // when both bounds ran
  bool bound_inversion = false;  // lower > upper + 1e-6
  std::vector<std::string> errors;
  nlohmann::json config;
};

/// Fills gap and bound_inversion from the bounds present.
void finalize(RunReport& report);

nlohmann::json to_json(const BoundReport& r);
BoundReport bound_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunReport& r);
RunReport run_report_from_json(const nlohmann::json& j);

/// Pipelines on a parsed config.
BoundReport run_lower(const RunConfig& config);
BoundReport run_upper(const RunConfig& config);
BoundReport run_classic(const RunConfig& config);

struct SweepRow {
  double epsilon = 0.0;
  int n_xi = 0;
  int n_eta = 0;
  int K = 0;
  std::optional<double> lower;
  std::optional<double> upper;
  std::optional<double> gap;
  std::string note;  // per-point failures
};

/// One row per sweep point, in sweep order. Failures are recorded in the row
/// and the sweep continues.
std::vector<SweepRow> run_sweep(const RunConfig& config);

/// CSV with header "epsilon,n_xi,n_eta,K,lower,upper,gap,note". Numbers use
/// %.17g; missing values are empty cells.
std::string results_csv(const std::vector<SweepRow>& rows);

/// Runs the sweep in `config` and returns the CSV table.
std::string emit_sweep(const RunConfig& config);

/// Agreement check between the dual kink scan and the primal
/// transport LP on random instances.
struct VerifyOutcome {
  int trials = 0;
  int agreements = 0;
  double max_difference = 0.0;
};
VerifyOutcome verify_worst_case(std::uint64_t seed, int trials, double tol = 1e-6);

struct CommandOptions {
  std::string command;  // lower | upper | both | verify | sweep
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  int trials = 100;
  std::optional<Units> units;
};

/// Executes one CLI command. Exit codes: 0 success, 1 solver failure,
/// 2 configuration error.
int run_command(const CommandOptions& options, std::ostream& out, std::ostream& err);

}  // namespace drssd::cli
