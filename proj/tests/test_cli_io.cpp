#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "drssd/cli_io.hpp"
#include "drssd/error.hpp"
#include "fixtures.hpp"

using namespace drssd;
using namespace drssd::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("drssd_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Small three-asset config, quick to solve.
json small_config() {
  return json::parse(R"({
    "schema": "drssd-config/1",
    "name": "small",
    "instance": {
      "objective": { "mean_loss": true },
      "decision_set": "simplex",
      "benchmark": "equal_weights",
      "support": "sample_box"
    },
    "ball": { "radius": 0.05, "samples": [[1, 2, 0], [3, 1, 2], [2, 2, 2], [0, 3, 1]] },
    "lower": { "n_xi": 27, "n_eta": 8, "grid": "grid" },
    "upper": { "K": 2 }
  })");
}

ParseError parse_error(const std::string& text, bool header = false) {
  std::istringstream in(text);
  try {
    parse_returns_csv(in, header, Units::kFraction);
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "no ParseError for: " << text;
  return ParseError("", -1, -1);
}

}  // namespace

TEST(ReturnsCsv, Shape) {
  std::ostringstream text;
  text << "a,b,c,d,e,f,g,h\n";
  for (int r = 0; r < 22; ++r) {
    for (int c = 0; c < 8; ++c) text << (c ? "," : "") << r * 0.5 - c;
    text << "\n";
  }
  std::istringstream in(text.str());
  const MatrixXd m = parse_returns_csv(in, true, Units::kFraction);
  EXPECT_EQ(m.rows(), 22);
  EXPECT_EQ(m.cols(), 8);
  EXPECT_EQ(m(3, 2), 1.5 - 2);
}

TEST(ReturnsCsv, PercentBecomesFraction) {
  std::istringstream in("12.5,-3\n4,0\n");
  const MatrixXd m = parse_returns_csv(in, false, Units::kPercent);
  EXPECT_DOUBLE_EQ(m(0, 0), 0.125);
  EXPECT_DOUBLE_EQ(m(0, 1), -0.03);
}

TEST(ReturnsCsv, Errors) {
  EXPECT_STREQ(parse_error("").what(), "no data rows");
  EXPECT_STREQ(parse_error("x,y\n", true).what(), "no data rows");
  const ParseError ragged = parse_error("1,2,3,4,5,6,7,8\n1,2,3,4,5,6,7\n");
  EXPECT_EQ(ragged.row(), 2);
  EXPECT_NE(std::string(ragged.what()).find("row 2"), std::string::npos);
  const ParseError cell = parse_error("1,2\n3,abc\n");
  EXPECT_EQ(cell.row(), 2);
  EXPECT_EQ(cell.column(), 2);
  const ParseError empty_cell = parse_error("1,,2\n");
  EXPECT_EQ(empty_cell.column(), 2);
  EXPECT_THROW(load_returns_csv("/nonexistent/returns.csv", false, Units::kFraction), ParseError);
}

TEST(Config, Example1MatchesFixture) {
  const RunConfig c = load_config(std::string(DRSSD_DATA_DIR) + "/example1.json");
  const SsdInstance ref = test::example1();
  EXPECT_EQ(c.instance.ball.samples, ref.ball.samples);
  EXPECT_EQ(c.instance.ball.radius, ref.ball.radius);
  EXPECT_EQ(c.instance.benchmark, ref.benchmark);
  EXPECT_EQ(c.instance.objective.norm_weight, 0.5);
  EXPECT_EQ(eta_range(c.instance).r_max, 250.0);
  EXPECT_EQ(c.lower.n_xi, 300);
  EXPECT_EQ(c.lower.n_eta, 300);
  EXPECT_EQ(c.upper.K, 12);
  EXPECT_TRUE(c.classic);
}

TEST(Config, PresetsAndUnits) {
  json j = small_config();
  j["units"] = "percent";
  const RunConfig c = parse_config(j);
  EXPECT_DOUBLE_EQ(c.instance.ball.radius, 0.0005);
  EXPECT_DOUBLE_EQ(c.instance.ball.samples(1, 0), 0.03);
  EXPECT_NEAR(c.instance.objective.linear[0], -0.015, 1e-15);
  EXPECT_EQ(c.instance.decision_set.A_eq.rows(), 1);
  EXPECT_DOUBLE_EQ(c.instance.benchmark[2], 1.0 / 3.0);
  EXPECT_TRUE(c.instance.support.contains(c.instance.ball.samples.row(0).transpose()));
}

TEST(Config, ScenarioFileRelativeToConfig) {
  const fs::path dir = scratch("csvcfg");
  std::ofstream(dir / "r.csv") << "a,b\n1,2\n3,1\n2,2\n";
  json j = small_config();
  j["ball"] = json{{"radius", 0.1}, {"samples_csv", "r.csv"}, {"header", true}};
  std::ofstream(dir / "c.json") << j.dump();
  const RunConfig c = load_config((dir / "c.json").string());
  EXPECT_EQ(c.instance.ball.size(), 3);
  EXPECT_EQ(c.instance.dim(), 2);
}

TEST(Config, Rejections) {
  json j = small_config();
  j["schema"] = "other";
  EXPECT_THROW(parse_config(j), ConfigError);
  j = small_config();
  j["lowr"] = json::object();
  EXPECT_THROW(parse_config(j), ConfigError);
  j = small_config();
  j["upper"]["K"] = 0;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = small_config();
  j["ball"]["radius"] = -1;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = small_config();
  j["instance"]["support"] = json{{"box", {{"lo", {0, 0, 0}}, {"hi", {1, 1, 1}}}}};
  EXPECT_THROW(parse_config(j), ConfigError);  // samples outside the box
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Report, GapFormula) {
  EXPECT_DOUBLE_EQ(relative_gap(0.3014, 0.3025), std::abs((0.3025 - 0.3014) / 0.3014));
  EXPECT_DOUBLE_EQ(relative_gap(-11.0, -10.0), 1.0 / 11.0);
}

TEST(Report, BoundInversionFlag) {
  RunReport r;
  r.lower = BoundReport{};
  r.upper = BoundReport{};
  r.lower->value = 1.0;
  r.upper->value = 1.0 - 2e-6;
  finalize(r);
  EXPECT_TRUE(r.bound_inversion);
  r.upper->value = 1.0 - 5e-7;
  finalize(r);
  EXPECT_FALSE(r.bound_inversion);
  ASSERT_TRUE(r.gap.has_value());
}

TEST(Report, RoundTripBitExact) {
  RunReport r;
  r.command = "both";
  BoundReport b;
  b.type = BoundType::kUpper;
  b.value = 0.1 + 0.2;
  b.solution = {1.0 / 3.0, 2.0 / 3.0, 1e-300};
  b.trace = {0.5, 0.4999999999999999, 0.30000000000000004};
  b.note = "early stop, still a valid upper bound";
  b.iterations = 7;
  b.solver_iterations = 99;
  b.last_status = SolveStatus::kInaccurate;
  b.primal_residual = 1.2345678901234567e-9;
  b.gap = std::nan("");
  b.seconds = 0.125;
  r.upper = b;
  r.lower = b;
  r.lower->type = BoundType::kLower;
  r.lower->value = 0.29128043;
  finalize(r);
  r.errors = {"x"};
  r.config = small_config();
  const json j = json::parse(to_json(r).dump(2));
  const RunReport back = run_report_from_json(j);
  ASSERT_TRUE(back.upper && back.lower && !back.classic);
  EXPECT_EQ(back.upper->value, b.value);
  EXPECT_EQ(back.upper->solution, b.solution);
  EXPECT_EQ(back.upper->trace, b.trace);
  EXPECT_EQ(back.upper->primal_residual, b.primal_residual);
  EXPECT_TRUE(std::isnan(back.upper->gap));
  EXPECT_EQ(back.upper->last_status, SolveStatus::kInaccurate);
  EXPECT_EQ(back.upper->note, b.note);
  EXPECT_EQ(*back.gap, *r.gap);
  EXPECT_EQ(back.config, r.config);
  EXPECT_EQ(to_json(back).dump(), to_json(r).dump());
}

TEST(Sweep, EmptyIsHeaderOnly) {
  RunConfig c = parse_config(small_config());
  c.sweep.kind = SweepKind::kEpsilons;
  EXPECT_EQ(emit_sweep(c), "epsilon,n_xi,n_eta,K,lower,upper,gap,note\n");
}

TEST(Sweep, EpsilonsDeterministicAndMonotone) {
  json j = small_config();
  j["sweep"] = json{{"kind", "epsilons"}, {"epsilons", {1e-4, 1e-2, 0.1}}, {"threads", 2}};
  const RunConfig c = parse_config(j);
  const auto rows = run_sweep(c);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    ASSERT_TRUE(rows[r].lower && rows[r - 1].lower);
    EXPECT_GE(*rows[r].lower, *rows[r - 1].lower - 1e-8);
  }
  for (const auto& r : rows)
    if (r.lower && r.upper) {
      EXPECT_LE(*r.lower, *r.upper + 1e-6);
    }
  RunConfig serial = c;
  serial.sweep.threads = 1;
  EXPECT_EQ(results_csv(rows), emit_sweep(serial));
}

TEST(Sweep, IntervalsNested) {
  json j = small_config();
  j["sweep"] = json{{"kind", "intervals"}, {"intervals", {1, 2, 4}}};
  const auto rows = run_sweep(parse_config(j));
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    ASSERT_TRUE(rows[r].upper && rows[r - 1].upper) << rows[r].note;
    EXPECT_LE(*rows[r].upper, *rows[r - 1].upper + 1e-8);
    EXPECT_FALSE(rows[r].lower.has_value());
  }
}

TEST(Command, BothWritesReportAndTable) {
  const fs::path dir = scratch("both");
  std::ofstream(dir / "c.json") << small_config().dump();
  std::ostringstream out, err;
  CommandOptions o;
  o.command = "both";
  o.config = (dir / "c.json").string();
  o.out_dir = (dir / "out").string();
  ASSERT_EQ(run_command(o, out, err), 0) << err.str();
  const RunReport rep = run_report_from_json(json::parse(read_file(dir / "out" / "report.json")));
  ASSERT_TRUE(rep.lower && rep.upper);
  EXPECT_FALSE(rep.bound_inversion);
  EXPECT_EQ(*rep.gap, relative_gap(rep.lower->value, rep.upper->value));
  const std::string table = read_file(dir / "out" / "results.csv");
  EXPECT_EQ(table.rfind("epsilon,n_xi,n_eta,K,lower,upper,gap,note\n", 0), 0u);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 2);
  // same config and seed: byte-identical table
  const std::string first = table;
  ASSERT_EQ(run_command(o, out, err), 0);
  EXPECT_EQ(read_file(dir / "out" / "results.csv"), first);
}

TEST(Command, MissingConfigExitTwo) {
  std::ostringstream out, err;
  CommandOptions o;
  o.command = "both";
  o.config = "/nonexistent/example1.json";
  EXPECT_EQ(run_command(o, out, err), 2);
  EXPECT_NE(err.str().find("/nonexistent/example1.json"), std::string::npos);
}

TEST(Command, VerifyAgreements) {
  std::ostringstream out, err;
  CommandOptions o;
  o.command = "verify";
  o.seed = 7;
  o.trials = 100;
  EXPECT_EQ(run_command(o, out, err), 0);
  EXPECT_NE(out.str().find("100/100"), std::string::npos);
}

TEST(Command, BinaryExitCodes) {
  const std::string cli = DRSSD_CLI;
  EXPECT_EQ(std::system((cli + " both --config /nonexistent.json > /dev/null 2>&1").c_str()) >> 8, 2);
  EXPECT_EQ(std::system((cli + " verify --seed 7 --trials 10 > /dev/null 2>&1").c_str()) >> 8, 0);
  EXPECT_EQ(std::system((cli + " bogus > /dev/null 2>&1").c_str()) >> 8, 2);
}
