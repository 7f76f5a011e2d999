#include "drssd/cli_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

#include "drssd/ambiguity.hpp"
#include "drssd/error.hpp"
#include "drssd/lower_bound.hpp"
#include "drssd/oracle.hpp"
#include "drssd/random_instance.hpp"

namespace drssd::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double unit_scale(Units u) { return u == Units::kPercent ? 0.01 : 1.0; }

// ---------------------------------------------------------------------------
// JSON helpers

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) bad(where, "expected an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) bad(where, "unknown key '" + k + "'");
  }
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) bad(where, "expected an integer");
  return j.get<int>();
}

bool get_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) bad(where, "expected true or false");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) bad(where, "expected a string");
  return j.get<std::string>();
}

VectorXd get_vector(const json& j, const std::string& where) {
  if (!j.is_array()) bad(where, "expected an array of numbers");
  VectorXd v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<int>(i)] = get_number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

MatrixXd get_matrix(const json& j, const std::string& where, int cols) {
  if (!j.is_array()) bad(where, "expected an array of rows");
  MatrixXd m(static_cast<int>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const VectorXd row = get_vector(j[r], where + "[" + std::to_string(r) + "]");
    if (row.size() != cols)
      bad(where, "row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                     " entries, expected " + std::to_string(cols));
    m.row(static_cast<int>(r)) = row.transpose();
  }
  return m;
}

int matrix_width(const json& j) {
  if (j.is_array() && !j.empty() && j[0].is_array()) return static_cast<int>(j[0].size());
  return 0;
}

json vec_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? json(x) : json(nullptr));
  return a;
}

json num_json(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double json_num(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

std::vector<double> json_vec(const json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(json_num(x));
  return v;
}

SolveStatus parse_status(const std::string& s) {
  for (SolveStatus st : {SolveStatus::kOptimal, SolveStatus::kInfeasible, SolveStatus::kUnbounded,
                         SolveStatus::kInaccurate, SolveStatus::kIterationLimit})
    if (to_string(st) == s) return st;
  throw ConfigError("unknown solver status '" + s + "'");
}

BoundType parse_bound_type(const std::string& s) {
  for (BoundType t : {BoundType::kLower, BoundType::kUpper, BoundType::kClassic})
    if (to_string(t) == s) return t;
  throw ConfigError("unknown bound type '" + s + "'");
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  const fs::path p(path);
  return p.is_absolute() ? p.string() : (fs::path(base_dir) / p).string();
}

// ---------------------------------------------------------------------------
// Config sections

void parse_instance(const json& ji, const json& jb, RunConfig& cfg, const std::string& base_dir) {
  check_keys(ji, "instance", {"objective", "decision_set", "benchmark", "support"});
  check_keys(jb, "ball", {"radius", "samples", "samples_csv", "header"});
  SsdInstance& inst = cfg.instance;
  const double scale = unit_scale(cfg.units);

  // Ball first: the dimension comes from the samples.
  if (jb.contains("samples") == jb.contains("samples_csv"))
    bad("ball", "give exactly one of samples or samples_csv");
  if (jb.contains("samples")) {
    const int n = matrix_width(jb["samples"]);
    if (n == 0) bad("ball.samples", "expected a nonempty array of rows");
    inst.ball.samples = get_matrix(jb["samples"], "ball.samples", n) * scale;
  } else {
    const std::string path = resolve(get_string(jb["samples_csv"], "ball.samples_csv"), base_dir);
    const bool header = jb.contains("header") ? get_bool(jb["header"], "ball.header") : false;
    if (!fs::exists(path)) throw ConfigError("scenario file not found: " + path);
    inst.ball.samples = load_returns_csv(path, header, cfg.units);
  }
  if (!jb.contains("radius")) bad("ball", "missing radius");
  const double radius = get_number(jb["radius"], "ball.radius");
  if (!(radius >= 0.0)) bad("ball.radius", "must be nonnegative");
  inst.ball.radius = radius * scale;
  const int n = inst.ball.dim();

  // Objective.
  if (!ji.contains("objective")) bad("instance", "missing objective");
  const json& jo = ji["objective"];
  check_keys(jo, "instance.objective", {"linear", "norm_weight", "mean_loss"});
  const bool mean_loss = jo.contains("mean_loss") && get_bool(jo["mean_loss"], "objective.mean_loss");
  if (mean_loss && jo.contains("linear")) bad("instance.objective", "mean_loss and linear exclude each other");
  if (mean_loss) {
    inst.objective.linear = -inst.ball.samples.colwise().mean().transpose();
  } else if (jo.contains("linear")) {
    inst.objective.linear = get_vector(jo["linear"], "objective.linear");
  } else {
    inst.objective.linear = VectorXd::Zero(n);
  }
  inst.objective.norm_weight =
      jo.contains("norm_weight") ? get_number(jo["norm_weight"], "objective.norm_weight") : 0.0;

  // Decision set.
  if (!ji.contains("decision_set")) bad("instance", "missing decision_set");
  const json& jz = ji["decision_set"];
  if (jz.is_string()) {
    if (jz.get<std::string>() != "simplex") bad("instance.decision_set", "unknown preset");
    inst.decision_set.A_ineq = -MatrixXd::Identity(n, n);
    inst.decision_set.b_ineq = VectorXd::Zero(n);
    inst.decision_set.A_eq = MatrixXd::Ones(1, n);
    inst.decision_set.b_eq = VectorXd::Ones(1);
  } else {
    check_keys(jz, "instance.decision_set", {"A_ineq", "b_ineq", "A_eq", "b_eq"});
    auto mat = [&](const char* key) {
      return jz.contains(key) ? get_matrix(jz[key], std::string("decision_set.") + key, n)
                              : MatrixXd(0, n);
    };
    auto vec = [&](const char* key) {
      return jz.contains(key) ? get_vector(jz[key], std::string("decision_set.") + key)
                              : VectorXd(0);
    };
    inst.decision_set.A_ineq = mat("A_ineq");
    inst.decision_set.b_ineq = vec("b_ineq");
    inst.decision_set.A_eq = mat("A_eq");
    inst.decision_set.b_eq = vec("b_eq");
  }

  // Benchmark.
  if (!ji.contains("benchmark")) bad("instance", "missing benchmark");
  if (ji["benchmark"].is_string()) {
    if (ji["benchmark"].get<std::string>() != "equal_weights")
      bad("instance.benchmark", "unknown preset");
    inst.benchmark = VectorXd::Constant(n, 1.0 / n);
  } else {
    inst.benchmark = get_vector(ji["benchmark"], "instance.benchmark");
  }

  // Support.
  if (!ji.contains("support")) bad("instance", "missing support");
  const json& js = ji["support"];
  if (js.is_string()) {
    if (js.get<std::string>() != "sample_box") bad("instance.support", "unknown preset");
    inst.support = SupportPolytope::box(inst.ball.samples.colwise().minCoeff().transpose(),
                                        inst.ball.samples.colwise().maxCoeff().transpose());
  } else if (js.contains("box")) {
    check_keys(js, "instance.support", {"box"});
    check_keys(js["box"], "instance.support.box", {"lo", "hi"});
    inst.support = SupportPolytope::box(get_vector(js["box"]["lo"], "support.box.lo") * scale,
                                        get_vector(js["box"]["hi"], "support.box.hi") * scale);
  } else {
    check_keys(js, "instance.support", {"C", "d"});
    if (!js.contains("C") || !js.contains("d")) bad("instance.support", "needs C and d");
    inst.support.C = get_matrix(js["C"], "support.C", n);
    inst.support.d = get_vector(js["d"], "support.d") * scale;
  }

  try {
    check_dimensions(inst);
  } catch (const InstanceError& e) {
    throw ConfigError(std::string("instance: ") + e.what());
  }
  const ValidationReport rep = validate_instance(inst);
  if (!rep.ok()) {
    std::string msg = "instance:";
    for (const auto& v : rep.violations) msg += " " + v + ";";
    throw ConfigError(msg);
  }
}

void parse_lower(const json& j, LowerSettings& s) {
  check_keys(j, "lower",
             {"enabled", "n_xi", "n_eta", "grid", "seed", "cutting_plane", "max_iter", "batch"});
  if (j.contains("enabled")) s.enabled = get_bool(j["enabled"], "lower.enabled");
  if (j.contains("n_xi")) s.n_xi = get_int(j["n_xi"], "lower.n_xi");
  if (j.contains("n_eta")) s.n_eta = get_int(j["n_eta"], "lower.n_eta");
  if (j.contains("grid")) {
    try {
      s.mode = parse_grid_mode(get_string(j["grid"], "lower.grid"));
    } catch (const ConfigError& e) {
      bad("lower.grid", e.what());
    }
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) bad("lower.seed", "expected a nonnegative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("cutting_plane")) s.cutting_plane = get_bool(j["cutting_plane"], "lower.cutting_plane");
  if (j.contains("max_iter")) s.max_iter = get_int(j["max_iter"], "lower.max_iter");
  if (j.contains("batch")) s.batch = get_int(j["batch"], "lower.batch");
  if (s.n_xi < 1 || s.n_eta < 1) bad("lower", "n_xi and n_eta must be positive");
  if (s.max_iter < 1 || s.batch < 1) bad("lower", "max_iter and batch must be positive");
}

void parse_upper(const json& j, UpperSettings& s, int n) {
  check_keys(j, "upper", {"enabled", "K", "start", "max_iter", "tol", "fixed_z_objective"});
  if (j.contains("enabled")) s.enabled = get_bool(j["enabled"], "upper.enabled");
  if (j.contains("K")) s.K = get_int(j["K"], "upper.K");
  if (s.K < 1) bad("upper.K", "must be at least 1");
  if (j.contains("start")) {
    if (j["start"].is_string()) {
      if (j["start"].get<std::string>() != "benchmark") bad("upper.start", "unknown preset");
    } else {
      s.start = get_vector(j["start"], "upper.start");
      if (s.start->size() != n) bad("upper.start", "wrong length");
    }
  }
  if (j.contains("max_iter")) s.max_iter = get_int(j["max_iter"], "upper.max_iter");
  if (j.contains("tol")) s.tol = get_number(j["tol"], "upper.tol");
  if (j.contains("fixed_z_objective")) {
    const std::string v = get_string(j["fixed_z_objective"], "upper.fixed_z_objective");
    if (v == "zero") s.fixed_z_objective = FixedZObjective::kZero;
    else if (v == "max_slack") s.fixed_z_objective = FixedZObjective::kMaxSlack;
    else bad("upper.fixed_z_objective", "expected zero or max_slack");
  }
  if (s.max_iter < 1 || !(s.tol >= 0.0)) bad("upper", "max_iter must be positive and tol nonnegative");
}

void parse_solver(const json& j, SolverSettings& s) {
  check_keys(j, "solver", {"feas_tol", "gap_tol", "max_iter", "equilibration_sweeps",
                           "inaccurate_feas_tol", "inaccurate_gap_tol", "verbose"});
  if (j.contains("feas_tol")) s.feas_tol = get_number(j["feas_tol"], "solver.feas_tol");
  if (j.contains("gap_tol")) s.gap_tol = get_number(j["gap_tol"], "solver.gap_tol");
  if (j.contains("max_iter")) s.max_iter = get_int(j["max_iter"], "solver.max_iter");
  if (j.contains("equilibration_sweeps"))
    s.equilibration_sweeps = get_int(j["equilibration_sweeps"], "solver.equilibration_sweeps");
  if (j.contains("inaccurate_feas_tol"))
    s.inaccurate_feas_tol = get_number(j["inaccurate_feas_tol"], "solver.inaccurate_feas_tol");
  if (j.contains("inaccurate_gap_tol"))
    s.inaccurate_gap_tol = get_number(j["inaccurate_gap_tol"], "solver.inaccurate_gap_tol");
  if (j.contains("verbose")) s.verbose = get_bool(j["verbose"], "solver.verbose");
  if (!(s.feas_tol > 0.0) || !(s.gap_tol > 0.0) || s.max_iter < 1)
    bad("solver", "tolerances and max_iter must be positive");
}

void parse_sweep(const json& j, SweepSettings& s, double scale) {
  check_keys(j, "sweep", {"kind", "epsilons", "sizes", "intervals", "threads"});
  if (j.contains("kind")) {
    try {
      s.kind = parse_sweep_kind(get_string(j["kind"], "sweep.kind"));
    } catch (const ConfigError& e) {
      bad("sweep.kind", e.what());
    }
  }
  if (j.contains("epsilons")) {
    const VectorXd e = get_vector(j["epsilons"], "sweep.epsilons");
    for (double v : e) {
      if (!(v >= 0.0)) bad("sweep.epsilons", "must be nonnegative");
      s.epsilons.push_back(v * scale);
    }
  }
  if (j.contains("sizes")) {
    if (!j["sizes"].is_array()) bad("sweep.sizes", "expected [[n_xi, n_eta], ...]");
    for (const auto& p : j["sizes"]) {
      if (!p.is_array() || p.size() != 2) bad("sweep.sizes", "expected [[n_xi, n_eta], ...]");
      s.sizes.emplace_back(get_int(p[0], "sweep.sizes"), get_int(p[1], "sweep.sizes"));
      if (s.sizes.back().first < 1 || s.sizes.back().second < 1) bad("sweep.sizes", "must be positive");
    }
  }
  if (j.contains("intervals")) {
    if (!j["intervals"].is_array()) bad("sweep.intervals", "expected an array of integers");
    for (const auto& k : j["intervals"]) {
      s.intervals.push_back(get_int(k, "sweep.intervals"));
      if (s.intervals.back() < 1) bad("sweep.intervals", "must be at least 1");
    }
  }
  if (j.contains("threads")) s.threads = get_int(j["threads"], "sweep.threads");
  if (s.threads < 1) bad("sweep.threads", "must be positive");
}

void parse_output(const json& j, OutputSettings& s) {
  check_keys(j, "output", {"dir", "report", "table"});
  if (j.contains("dir")) s.dir = get_string(j["dir"], "output.dir");
  if (j.contains("report")) s.report = get_string(j["report"], "output.report");
  if (j.contains("table")) s.table = get_string(j["table"], "output.table");
}

// ---------------------------------------------------------------------------

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

VectorXd upper_start(const RunConfig& cfg) {
  return cfg.upper.start ? *cfg.upper.start : cfg.instance.benchmark;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << content;
  if (!f) throw ConfigError("cannot write " + path.string());
}

void print_bound(std::ostream& out, const BoundReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-7s %.9g  (%s, %d outer / %d solver iterations, %.2f s)",
                to_string(r.type).c_str(), r.value, to_string(r.last_status).c_str(),
                r.iterations, r.solver_iterations, r.seconds);
  out << buf;
  if (!r.note.empty()) out << "  [" << r.note << "]";
  out << "\n";
}

}  // namespace

// ---------------------------------------------------------------------------

Units parse_units(const std::string& s) {
  if (s == "fraction") return Units::kFraction;
  if (s == "percent") return Units::kPercent;
  throw ConfigError("unknown units '" + s + "' (expected percent or fraction)");
}

std::string to_string(Units units) { return units == Units::kPercent ? "percent" : "fraction"; }

SweepKind parse_sweep_kind(const std::string& s) {
  if (s == "none") return SweepKind::kNone;
  if (s == "epsilons") return SweepKind::kEpsilons;
  if (s == "sizes") return SweepKind::kSizes;
  if (s == "intervals") return SweepKind::kIntervals;
  throw ConfigError("unknown sweep kind '" + s + "' (expected epsilons, sizes or intervals)");
}

std::string to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::kNone: return "none";
    case SweepKind::kEpsilons: return "epsilons";
    case SweepKind::kSizes: return "sizes";
    case SweepKind::kIntervals: return "intervals";
  }
  return "none";
}

MatrixXd parse_returns_csv(std::istream& in, bool has_header, Units units) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  int width = -1;
  bool header_pending = has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      ++col;
      const std::string t = trim(cell);
      double v = 0.0;
      std::size_t used = 0;
      try {
        v = std::stod(t, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (t.empty() || used != t.size() || !std::isfinite(v))
        throw ParseError("row " + std::to_string(line_no) + ", column " + std::to_string(col) +
                             ": not a number: '" + t + "'",
                         line_no, col);
      row.push_back(v * unit_scale(units));
    }
    if (!line.empty() && line.back() == ',') ++col, row.push_back(kNaN);
    if (width < 0) width = col;
    if (col != width)
      throw ParseError("row " + std::to_string(line_no) + " has " + std::to_string(col) +
                           " fields, expected " + std::to_string(width),
                       line_no, 0);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no data rows", 0, 0);
  MatrixXd m(static_cast<int>(rows.size()), width);
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < width; ++c) {
      if (!std::isfinite(rows[r][c]))
        throw ParseError("row " + std::to_string(r + 1) + ", column " + std::to_string(c + 1) +
                             ": empty cell",
                         r + 1, c + 1);
      m(r, c) = rows[r][c];
    }
  return m;
}

MatrixXd load_returns_csv(const std::string& path, bool has_header, Units units) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path, 0, 0);
  try {
    return parse_returns_csv(f, has_header, units);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.row(), e.column());
  }
}

RunConfig parse_config(const json& j, const std::string& base_dir,
                       std::optional<Units> units_override) {
  check_keys(j, "config", {"schema", "name", "units", "instance", "ball", "lower", "upper",
                           "classic", "solver", "sweep", "output"});
  if (!j.contains("schema") || !j["schema"].is_string() || j["schema"] != kConfigSchema)
    throw ConfigError(std::string("config: schema must be \"") + kConfigSchema + "\"");
  RunConfig cfg;
  cfg.echo = j;
  if (j.contains("name")) cfg.name = get_string(j["name"], "name");
  if (j.contains("units")) cfg.units = parse_units(get_string(j["units"], "units"));
  if (units_override) cfg.units = *units_override;
  if (!j.contains("instance")) bad("config", "missing instance");
  if (!j.contains("ball")) bad("config", "missing ball");
  parse_instance(j["instance"], j["ball"], cfg, base_dir);
  if (j.contains("lower")) parse_lower(j["lower"], cfg.lower);
  if (j.contains("upper")) parse_upper(j["upper"], cfg.upper, cfg.instance.dim());
  if (j.contains("classic")) cfg.classic = get_bool(j["classic"], "classic");
  if (j.contains("solver")) parse_solver(j["solver"], cfg.solver);
  if (j.contains("sweep")) parse_sweep(j["sweep"], cfg.sweep, unit_scale(cfg.units));
  if (j.contains("output")) parse_output(j["output"], cfg.output);
  return cfg;
}

RunConfig load_config(const std::string& path, std::optional<Units> units_override) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  const std::string base = fs::path(path).parent_path().string();
  return parse_config(j, base.empty() ? "." : base, units_override);
}

double relative_gap(double lower, double upper) { return std::abs((upper - lower) / lower); }

void finalize(RunReport& r) {
  r.gap.reset();
  r.bound_inversion = false;
  if (r.lower && r.upper) {
    r.gap = relative_gap(r.lower->value, r.upper->value);
    r.bound_inversion = r.lower->value > r.upper->value + 1e-6;
  }
}

json to_json(const BoundReport& r) {
  return json{{"bound_type", to_string(r.type)},
              {"value", num_json(r.value)},
              {"solution", vec_json(r.solution)},
              {"trace", vec_json(r.trace)},
              {"converged", r.converged},
              {"note", r.note},
              {"iterations", r.iterations},
              {"solver_iterations", r.solver_iterations},
              {"status", to_string(r.last_status)},
              {"primal_residual", num_json(r.primal_residual)},
              {"dual_residual", num_json(r.dual_residual)},
              {"gap", num_json(r.gap)},
              {"seconds", num_json(r.seconds)}};
}

BoundReport bound_report_from_json(const json& j) {
  BoundReport r;
  try {
    r.type = parse_bound_type(j.at("bound_type").get<std::string>());
    r.value = json_num(j.at("value"));
    r.solution = json_vec(j.at("solution"));
    r.trace = json_vec(j.at("trace"));
    r.converged = j.at("converged").get<bool>();
    r.note = j.at("note").get<std::string>();
    r.iterations = j.at("iterations").get<int>();
    r.solver_iterations = j.at("solver_iterations").get<int>();
    r.last_status = parse_status(j.at("status").get<std::string>());
    r.primal_residual = json_num(j.at("primal_residual"));
    r.dual_residual = json_num(j.at("dual_residual"));
    r.gap = json_num(j.at("gap"));
    r.seconds = json_num(j.at("seconds"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad bound report: ") + e.what());
  }
  return r;
}

json to_json(const RunReport& r) {
  json j{{"schema", kReportSchema}, {"command", r.command}};
  j["lower"] = r.lower ? to_json(*r.lower) : json(nullptr);
  j["upper"] = r.upper ? to_json(*r.upper) : json(nullptr);
  j["classic"] = r.classic ? to_json(*r.classic) : json(nullptr);
  j["gap"] = r.gap ? num_json(*r.gap) : json(nullptr);
  j["bound_inversion"] = r.bound_inversion;
  j["errors"] = r.errors;
  j["config"] = r.config;
  return j;
}

RunReport run_report_from_json(const json& j) {
  RunReport r;
  try {
    if (j.at("schema") != kReportSchema) throw ConfigError("report: unknown schema");
    r.command = j.at("command").get<std::string>();
    if (!j.at("lower").is_null()) r.lower = bound_report_from_json(j["lower"]);
    if (!j.at("upper").is_null()) r.upper = bound_report_from_json(j["upper"]);
    if (!j.at("classic").is_null()) r.classic = bound_report_from_json(j["classic"]);
    if (!j.at("gap").is_null()) r.gap = j["gap"].get<double>();
    r.bound_inversion = j.at("bound_inversion").get<bool>();
    r.errors = j.at("errors").get<std::vector<std::string>>();
    r.config = j.at("config");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad report: ") + e.what());
  }
  return r;
}

BoundReport run_lower(const RunConfig& cfg) {
  const LowerSettings& s = cfg.lower;
  const SampleGrids grids = generate_grids(cfg.instance, s.mode, s.n_xi, s.n_eta, s.seed);
  if (!s.cutting_plane) return solve_lower(cfg.instance, grids, cfg.solver);
  CuttingPlaneOptions opt;
  opt.max_iter = s.max_iter;
  opt.batch = s.batch;
  opt.solver = cfg.solver;
  return cutting_plane(cfg.instance, grids, opt).report;
}

BoundReport run_upper(const RunConfig& cfg) {
  const IntervalSplit split = split_eta_intervals(eta_range(cfg.instance), cfg.upper.K);
  ScaOptions opt;
  opt.max_iter = cfg.upper.max_iter;
  opt.tol = cfg.upper.tol;
  opt.fixed_z_objective = cfg.upper.fixed_z_objective;
  opt.solver = cfg.solver;
  return sca_solve(cfg.instance, split, upper_start(cfg), opt).report;
}

BoundReport run_classic(const RunConfig& cfg) { return classic_ssd_lp(cfg.instance, cfg.solver); }

std::vector<SweepRow> run_sweep(const RunConfig& base) {
  struct Point {
    RunConfig cfg;
    bool lower;
    bool upper;
  };
  std::vector<Point> points;
  const SweepSettings& sw = base.sweep;
  auto add = [&](RunConfig c, bool lo, bool up) { points.push_back({std::move(c), lo, up}); };
  switch (sw.kind) {
    case SweepKind::kNone: break;
    case SweepKind::kEpsilons:
      for (double e : sw.epsilons) {
        RunConfig c = base;
        c.instance.ball.radius = e;
        add(std::move(c), base.lower.enabled, base.upper.enabled);
      }
      break;
    case SweepKind::kSizes:
      for (auto [nx, ne] : sw.sizes) {
        RunConfig c = base;
        c.lower.n_xi = nx;
        c.lower.n_eta = ne;
        add(std::move(c), true, false);
      }
      break;
    case SweepKind::kIntervals:
      for (int K : sw.intervals) {
        RunConfig c = base;
        c.upper.K = K;
        add(std::move(c), false, true);
      }
      break;
  }

  auto evaluate = [](const Point& p) {
    SweepRow row;
    row.epsilon = p.cfg.instance.ball.radius;
    row.n_xi = p.cfg.lower.n_xi;
    row.n_eta = p.cfg.lower.n_eta;
    row.K = p.cfg.upper.K;
    auto attempt = [&](const char* what, auto fn, std::optional<double>& slot) {
      try {
        const BoundReport r = fn(p.cfg);
        slot = r.value;
        if (!r.note.empty()) row.note += std::string(row.note.empty() ? "" : "; ") + what + ": " + r.note;
      } catch (const Error& e) {
        row.note += std::string(row.note.empty() ? "" : "; ") + what + ": " + e.what();
      }
    };
    if (p.lower) attempt("lower", run_lower, row.lower);
    if (p.upper) attempt("upper", run_upper, row.upper);
    if (row.lower && row.upper) row.gap = relative_gap(*row.lower, *row.upper);
    return row;
  };

  std::vector<SweepRow> rows(points.size());
  const std::size_t batch = static_cast<std::size_t>(sw.threads);
  for (std::size_t start = 0; start < points.size(); start += batch) {
    const std::size_t end = std::min(points.size(), start + batch);
    if (batch == 1) {
      rows[start] = evaluate(points[start]);
      continue;
    }
    std::vector<std::future<SweepRow>> futs;
    for (std::size_t i = start; i < end; ++i)
      futs.push_back(std::async(std::launch::async, evaluate, std::cref(points[i])));
    for (std::size_t i = start; i < end; ++i) rows[i] = futs[i - start].get();
  }
  return rows;
}

std::string results_csv(const std::vector<SweepRow>& rows) {
  std::string out = "epsilon,n_xi,n_eta,K,lower,upper,gap,note\n";
  auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
  for (const SweepRow& r : rows) {
    out += fmt(r.epsilon) + "," + std::to_string(r.n_xi) + "," + std::to_string(r.n_eta) + "," +
           std::to_string(r.K) + "," + opt(r.lower) + "," + opt(r.upper) + "," + opt(r.gap) + "," +
           csv_cell(r.note) + "\n";
  }
  return out;
}

std::string emit_sweep(const RunConfig& config) { return results_csv(run_sweep(config)); }

VerifyOutcome verify_worst_case(std::uint64_t seed, int trials, double tol) {
  VerifyOutcome out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(1, 3), count(1, 6), extra(0, 6);
  std::uniform_real_distribution<double> psi_dist(-5.0, 5.0);
  for (int t = 0; t < trials; ++t) {
    RandomInstanceOptions opt;
    opt.dim = dim(rng);
    opt.samples = count(rng);
    opt.extra_points = extra(rng);
    opt.radius_max = 3.0;
    opt.box = 20;
    const RandomInstance ri = random_instance(rng(), opt);
    VectorXd psi(ri.points.rows());
    for (int j = 0; j < psi.size(); ++j) psi[j] = psi_dist(rng);
    const double dual = worst_case_expectation_discrete(psi, ri.points, ri.instance.ball).value;
    const double primal = oracle::transport_worst_case_lp(psi, ri.points, ri.instance.ball).value;
    const double diff = std::abs(dual - primal);
    out.max_difference = std::max(out.max_difference, diff);
    ++out.trials;
    if (diff <= tol * (1.0 + std::abs(primal))) ++out.agreements;
  }
  return out;
}

int run_command(const CommandOptions& o, std::ostream& out, std::ostream& err) {
  try {
    if (o.command == "verify") {
      if (o.trials < 1) throw ConfigError("--trials must be positive");
      const VerifyOutcome v = verify_worst_case(o.seed.value_or(0), o.trials);
      out << "verify: " << v.agreements << "/" << v.trials
          << " worst-case expectation agreements (max difference " << fmt(v.max_difference)
          << ")\n";
      return v.agreements == v.trials ? 0 : 1;
    }
    if (o.command != "lower" && o.command != "upper" && o.command != "both" &&
        o.command != "sweep")
      throw ConfigError("unknown command '" + o.command + "'");
    if (!o.config) throw ConfigError("--config is required for " + o.command);
    if (!fs::exists(*o.config)) throw ConfigError("config file not found: " + *o.config);
    RunConfig cfg = load_config(*o.config, o.units);
    if (o.seed) cfg.lower.seed = *o.seed;
    if (o.out_dir) cfg.output.dir = *o.out_dir;
    std::error_code ec;
    fs::create_directories(cfg.output.dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + cfg.output.dir);
    const fs::path dir(cfg.output.dir);

    if (o.command == "sweep") {
      const auto rows = run_sweep(cfg);
      write_file(dir / cfg.output.table, results_csv(rows));
      out << "sweep (" << to_string(cfg.sweep.kind) << "): " << rows.size() << " rows -> "
          << (dir / cfg.output.table).string() << "\n";
      return 0;
    }

    RunReport rep;
    rep.command = o.command;
    rep.config = cfg.echo;
    bool failed = false;
    auto attempt = [&](const char* what, BoundReport (*fn)(const RunConfig&),
                       std::optional<BoundReport>& slot) {
      try {
        slot = fn(cfg);
        print_bound(out, *slot);
      } catch (const SolverError& e) {
        rep.errors.push_back(std::string(what) + ": " + e.what());
        err << what << ": solver failure: " << e.what() << "\n";
        failed = true;
      }
    };
    if (cfg.classic) attempt("classic", run_classic, rep.classic);
    if (o.command == "lower" || o.command == "both") attempt("lower", run_lower, rep.lower);
    if (o.command == "upper" || o.command == "both") attempt("upper", run_upper, rep.upper);
    finalize(rep);
    if (rep.gap) out << "gap     " << fmt(*rep.gap) << "\n";
    if (rep.bound_inversion) {
      rep.errors.push_back("bound inversion: lower exceeds upper");
      err << "warning: bound inversion: lower exceeds upper\n";
    }

    SweepRow row;
    row.epsilon = cfg.instance.ball.radius;
    row.n_xi = cfg.lower.n_xi;
    row.n_eta = cfg.lower.n_eta;
    row.K = cfg.upper.K;
    if (rep.lower) row.lower = rep.lower->value;
    if (rep.upper) row.upper = rep.upper->value;
    row.gap = rep.gap;
    for (const auto& e : rep.errors) row.note += (row.note.empty() ? "" : "; ") + e;
    write_file(dir / cfg.output.report, to_json(rep).dump(2) + "\n");
    write_file(dir / cfg.output.table, results_csv({row}));
    return failed ? 1 : 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  } catch (const InstanceError& e) {
    err << "instance error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace drssd::cli
