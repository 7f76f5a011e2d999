#include <gtest/gtest.h>

#include <random>

#include "drssd/conic_solver.hpp"
#include "drssd/error.hpp"
#include "drssd/lower_bound.hpp"
#include "drssd/random_instance.hpp"
#include "exact_optimum.hpp"
#include "fixtures.hpp"

using namespace drssd;

namespace {

RandomInstance small_random(std::uint64_t seed) {
  RandomInstanceOptions opt;
  opt.dim = 2 + static_cast<int>(seed % 2);
  opt.samples = 2 + static_cast<int>(seed % 4);
  opt.extra_points = 3;
  opt.box = 6;
  opt.radius_max = 0.8;
  return random_instance(seed, opt);
}

}  // namespace

TEST(LowerLayout, Counts) {
  SsdInstance s = test::example1();
  s.objective.norm_weight = 0.0;
  s.objective.linear = Eigen::Vector2d(1, 1);
  const SampleGrids g = generate_grids(s, GridMode::kGrid, 16, 3, 0);
  const LowerProgram lp = build_lower_lp(s, g, {0, 1, 2, 3}, {0, 1, 2});
  EXPECT_EQ(lp.layout.num_block_variables(2), 47);
  EXPECT_EQ(lp.layout.num_rows(), 135);
  EXPECT_EQ(lp.program.num_variables(), 47);
  EXPECT_EQ(lp.program.num_inequalities() + lp.program.num_equalities(), 135 + 3);
}

TEST(LowerLp, BenchmarkStaysFeasible) {
  const RandomInstance ri = small_random(3);
  const SampleGrids g = generate_grids(ri.instance, GridMode::kRandom, 12, 6, 1);
  LowerProgram lp = build_lower_lp(ri.instance, g);
  fix_decision(lp.program, lp.layout.decision, ri.instance.benchmark);
  EXPECT_EQ(solve(lp.program).status, SolveStatus::kOptimal);
}

TEST(LowerLp, ZeroRadiusEmpiricalEqualsClassic) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    RandomInstance ri = small_random(seed);
    ri.instance.ball.radius = 0.0;
    const double lower = solve_lower(ri.instance, empirical_grids(ri.instance)).value;
    const double classic = classic_ssd_lp(ri.instance).value;
    EXPECT_NEAR(lower, classic, 1e-8) << "seed " << seed;
  }
}

TEST(LowerLp, MatchesExactFiniteSupportOptimum) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RandomInstanceOptions opt;
    opt.samples = 3;
    opt.extra_points = 4;
    const RandomInstance ri = random_instance(500 + seed, opt);
    const double lp = solve_lower(ri.instance, test::full_support_grids(ri)).value;
    EXPECT_NEAR(lp, test::exact_two_asset_optimum(ri), 1e-5) << "seed " << seed;
  }
}

TEST(LowerLp, SolutionSatisfiesSampledConstraint) {
  const RandomInstance ri = small_random(7);
  const SampleGrids g = generate_grids(ri.instance, GridMode::kRandom, 15, 8, 2);
  const BoundReport r = solve_lower(ri.instance, g);
  ASSERT_EQ(r.last_status, SolveStatus::kOptimal);
  const VectorXd z = Eigen::Map<const VectorXd>(r.solution.data(), r.solution.size());
  EXPECT_LE(sampled_robust_violation(ri.instance, g, z), 1e-7);
  EXPECT_LE(r.value, ri.instance.objective.evaluate(ri.instance.benchmark) + 1e-8);
}

TEST(CuttingPlane, MatchesMonolithic) {
  for (std::uint64_t seed = 10; seed < 16; ++seed) {
    const RandomInstance ri = small_random(seed);
    const SampleGrids g = generate_grids(ri.instance, GridMode::kRandom, 10, 10, seed);
    const double mono = solve_lower(ri.instance, g).value;
    const CuttingPlaneResult cp = cutting_plane(ri.instance, g);
    EXPECT_TRUE(cp.report.converged);
    EXPECT_NEAR(cp.report.value, mono, 1e-6) << "seed " << seed;
    EXPECT_LE(cp.report.iterations, g.num_xi() * g.num_eta());
    EXPECT_LE(static_cast<int>(cp.cuts.J1.size()), cp.report.iterations);
    EXPECT_LE(static_cast<int>(cp.cuts.J2.size()), cp.report.iterations);
    for (std::size_t t = 1; t < cp.report.trace.size(); ++t)
      EXPECT_GE(cp.report.trace[t], cp.report.trace[t - 1] - 1e-7);
  }
}

TEST(CuttingPlane, FirstIterationIgnoresDominance) {
  const RandomInstance ri = small_random(4);
  const SampleGrids g = generate_grids(ri.instance, GridMode::kRandom, 10, 6, 4);
  CuttingPlaneOptions opt;
  opt.max_iter = 1;
  const CuttingPlaneResult one = cutting_plane(ri.instance, g, opt);
  // min of -mean return over the simplex: the best single asset
  const double unconstrained = ri.instance.objective.linear.minCoeff();
  EXPECT_NEAR(one.report.value, unconstrained, 1e-7);
  EXPECT_EQ(one.report.note, "not converged");
  EXPECT_LE(one.report.value, cutting_plane(ri.instance, g).report.value + 1e-9);
}

TEST(CuttingPlane, WarmStartAndBatch) {
  const RandomInstance ri = small_random(12);
  const SampleGrids g = generate_grids(ri.instance, GridMode::kRandom, 10, 8, 5);
  const CuttingPlaneResult cold = cutting_plane(ri.instance, g);
  const CuttingPlaneResult warm = cutting_plane(ri.instance, g, {}, cold.cuts);
  EXPECT_NEAR(warm.report.value, cold.report.value, 1e-7);
  EXPECT_LE(warm.report.iterations, 2);
  CuttingPlaneOptions opt;
  opt.batch = 4;
  const CuttingPlaneResult batch = cutting_plane(ri.instance, g, opt);
  EXPECT_NEAR(batch.report.value, cold.report.value, 1e-6);
  EXPECT_LE(batch.report.iterations, cold.report.iterations);
}

TEST(CuttingPlane, Deterministic) {
  const RandomInstance ri = small_random(2);
  const SampleGrids g = generate_grids(ri.instance, GridMode::kRandom, 10, 6, 9);
  const auto a = cutting_plane(ri.instance, g), b = cutting_plane(ri.instance, g);
  EXPECT_EQ(a.cuts.J1, b.cuts.J1);
  EXPECT_EQ(a.cuts.J2, b.cuts.J2);
  EXPECT_EQ(a.report.value, b.report.value);
}

TEST(CuttingPlane, BadOptions) {
  const RandomInstance ri = small_random(2);
  const SampleGrids g = empirical_grids(ri.instance);
  CuttingPlaneOptions opt;
  opt.max_iter = 0;
  EXPECT_THROW(cutting_plane(ri.instance, g, opt), ConfigError);
}

TEST(LowerMonotone, GridSupersets) {
  for (std::uint64_t seed = 20; seed < 24; ++seed) {
    const RandomInstance ri = small_random(seed);
    const SampleGrids big = generate_grids(ri.instance, GridMode::kRandom, 16, 10, seed);
    // subset: the samples plus every other extra point, every other level
    std::vector<int> rows = big.sample_rows;
    for (int r = 0; r < big.num_xi(); r += 2)
      if (std::find(rows.begin(), rows.end(), r) == rows.end()) rows.push_back(r);
    std::sort(rows.begin(), rows.end());
    MatrixXd pts(static_cast<int>(rows.size()), big.xi.cols());
    for (int q = 0; q < pts.rows(); ++q) pts.row(q) = big.xi.row(rows[q]);
    std::vector<double> lv;
    for (int k = 0; k < big.num_eta(); k += 2) lv.push_back(big.eta[k]);
    const SampleGrids small =
        test::grids_from(ri.instance, pts, Eigen::Map<VectorXd>(lv.data(), lv.size()));
    EXPECT_LE(solve_lower(ri.instance, small).value, solve_lower(ri.instance, big).value + 1e-8);
  }
}

TEST(LowerMonotone, Radius) {
  for (std::uint64_t seed = 30; seed < 33; ++seed) {
    RandomInstance ri = small_random(seed);
    const SampleGrids g = generate_grids(ri.instance, GridMode::kRandom, 12, 8, seed);
    double prev = -1e300;
    for (double eps : {1e-5, 1e-3, 0.05, 0.3, 1.0}) {
      ri.instance.ball.radius = eps;
      const double v = solve_lower(ri.instance, g).value;
      EXPECT_GE(v, prev - 1e-8) << "eps " << eps;
      prev = v;
    }
  }
}

TEST(Classic, SingletonDecisionSet) {
  SsdInstance s = test::example1();
  s.objective.norm_weight = 0.0;
  s.objective.linear = Eigen::Vector2d(2, 3);
  s.decision_set.A_eq = MatrixXd::Identity(2, 2);
  s.decision_set.b_eq = s.benchmark;
  EXPECT_NEAR(classic_ssd_lp(s).value, 2.0, 1e-8);
}

TEST(Classic, Example1) {
  const BoundReport r = classic_ssd_lp(test::example1());
  EXPECT_EQ(r.type, BoundType::kClassic);
  EXPECT_NEAR(r.value, 0.29128043, 1e-7);
  EXPECT_NEAR(r.solution[0], 0.423529, 1e-5);
  EXPECT_NEAR(r.solution[1], 0.4, 1e-5);
}

TEST(LowerLp, Example1SmallGrid) {
  const SsdInstance s = test::example1();
  const SampleGrids g = generate_grids(s, GridMode::kGrid, 36, 20, 0);
  const BoundReport r = solve_lower(s, g);
  EXPECT_EQ(r.last_status, SolveStatus::kOptimal);
  // never below the non-robust optimum on grids containing the data
  EXPECT_GE(r.value, classic_ssd_lp(s).value - 1e-7);
}
