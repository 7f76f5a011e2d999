#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "drssd/conic_solver.hpp"
#include "drssd/error.hpp"
#include "drssd/oracle.hpp"
#include "random_lp.hpp"

using namespace drssd;

namespace {

ConicProgram lp_x_ge_1() {
  ConicProgram p;
  const int x = p.add_variable();
  p.set_objective(x, 1.0);
  p.add_greater_equal({{x, 1.0}}, 1.0);
  return p;
}

ConicProgram soc_3_4() {
  ConicProgram p;
  const int t = p.add_variable();
  p.set_objective(t, 1.0);
  SocConstraint c;
  c.components = {AffineExpr({}, 3.0), AffineExpr({}, 4.0)};
  c.bound = AffineExpr({{t, 1.0}});
  p.add_soc(c);
  return p;
}

ConicProgram infeasible_lp() {
  ConicProgram p;
  const int x = p.add_variables(2, 0.0);
  p.set_objective(x, -1.0);
  p.set_objective(x + 1, -1.0);
  p.add_less_equal({{x, 1.0}, {x + 1, 1.0}}, 1.0);
  p.add_greater_equal({{x, 1.0}}, 2.0);
  return p;
}

}  // namespace

TEST(ConicSolver, MinXAboveOne) {
  const SolveResult r = solve(lp_x_ge_1());
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.x[0], 1.0, 1e-8);
  EXPECT_NEAR(r.primal_objective, 1.0, 1e-8);
}

TEST(ConicSolver, FixedArgumentCone) {
  const SolveResult r = solve(soc_3_4());
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.x[0], 5.0, 1e-7);
}

TEST(ConicSolver, InfeasibleCertificate) {
  EXPECT_EQ(solve(infeasible_lp()).status, SolveStatus::kInfeasible);
}

TEST(ConicSolver, UnboundedCertificate) {
  ConicProgram p;
  const int x = p.add_variables(2, 0.0);
  p.set_objective(x, -1.0);
  p.add_less_equal({{x + 1, 1.0}}, 1.0);
  EXPECT_EQ(solve(p).status, SolveStatus::kUnbounded);
}

TEST(ConicSolver, DiscCentreOffset) {
  // min x + y over the unit disc around (1, 2)
  ConicProgram p;
  const int x = p.add_variables(2);
  p.set_objective(x, 1.0);
  p.set_objective(x + 1, 1.0);
  SocConstraint c;
  c.components = {AffineExpr({{x, 1.0}}, -1.0), AffineExpr({{x + 1, 1.0}}, -2.0)};
  c.bound = AffineExpr({}, 1.0);
  p.add_soc(c);
  const SolveResult r = solve(p);
  ASSERT_TRUE(r.optimal());
  EXPECT_NEAR(r.primal_objective, 3.0 - std::sqrt(2.0), 1e-7);
  EXPECT_NEAR(r.x[0], 1.0 - std::sqrt(0.5), 1e-6);
}

TEST(ConicSolver, ZeroComponentConeIsLinear) {
  ConicProgram p;
  const int t = p.add_variable();
  p.set_objective(t, 1.0);
  SocConstraint c;
  c.bound = AffineExpr({{t, 1.0}}, -2.0);  // 0 <= t - 2
  p.add_soc(c);
  const SolveResult r = solve(p);
  ASSERT_TRUE(r.optimal());
  EXPECT_NEAR(r.x[0], 2.0, 1e-7);
}

TEST(ConicSolver, BoundsAndEqualities) {
  ConicProgram p;
  const int x = p.add_variables(3, 0.0, 4.0);
  p.set_objective(x, -1.0);
  p.set_objective(x + 1, -2.0);
  p.set_objective(x + 2, 1.0);
  p.add_equal({{x, 1.0}, {x + 1, 1.0}, {x + 2, 1.0}}, 5.0);
  const SolveResult r = solve(p);
  ASSERT_TRUE(r.optimal());
  // x2 = 4, x1 = 1, x3 = 0
  EXPECT_NEAR(r.primal_objective, -9.0, 1e-7);
  EXPECT_NEAR(r.x[1], 4.0, 1e-6);
}

TEST(ConicSolver, RandomLpsMatchVertexEnumeration) {
  std::mt19937_64 rng(2024);
  int compared = 0;
  for (int t = 0; t < 60; ++t) {
    const ConicProgram p = test::random_tiny_lp(rng);
    const auto brute = oracle::brute_lp_by_vertex_enumeration(p);
    const SolveResult r = solve(p);
    ASSERT_EQ(r.status, brute.status) << "trial " << t;
    if (brute.status == SolveStatus::kOptimal) {
      EXPECT_NEAR(r.primal_objective, brute.value, 1e-7) << "trial " << t;
      EXPECT_LE(r.gap, 1e-8);
      ++compared;
    }
  }
  EXPECT_GT(compared, 20);
}

TEST(ConicSolver, ObjectiveScalingKeepsArgmin) {
  ConicProgram p;
  const int x = p.add_variables(2, 0.0);
  p.set_objective(x, -1.0);
  p.set_objective(x + 1, -2.0);
  p.add_less_equal({{x, 1.0}, {x + 1, 3.0}}, 6.0);
  p.add_less_equal({{x, 2.0}, {x + 1, 1.0}}, 8.0);
  ConicProgram q = p;
  q.set_objective(x, -10.0);
  q.set_objective(x + 1, -20.0);
  const SolveResult a = solve(p), b = solve(q);
  ASSERT_TRUE(a.optimal() && b.optimal());
  EXPECT_NEAR(b.primal_objective, 10.0 * a.primal_objective, 1e-6);
  EXPECT_NEAR(a.x[0], b.x[0], 1e-6);
  EXPECT_NEAR(a.x[1], b.x[1], 1e-6);
}

TEST(ConicSolver, Deterministic) {
  std::mt19937_64 rng(5);
  const ConicProgram p = test::random_tiny_lp(rng);
  const SolveResult a = solve(p), b = solve(p);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.primal_objective, b.primal_objective);
}

TEST(ConicSolver, DualsCertifyLp) {
  // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0 -> (1.6, 1.2)
  ConicProgram p;
  const int x = p.add_variables(2, 0.0);
  p.set_objective(x, -1.0);
  p.set_objective(x + 1, -1.0);
  p.add_less_equal({{x, 1.0}, {x + 1, 2.0}}, 4.0);
  p.add_less_equal({{x, 3.0}, {x + 1, 1.0}}, 6.0);
  const SolveResult r = solve(p);
  ASSERT_TRUE(r.optimal());
  EXPECT_NEAR(r.primal_objective, -2.8, 1e-8);
  EXPECT_NEAR(r.dual_objective, -2.8, 1e-7);
  ASSERT_EQ(r.ineq_duals.size(), 2u);
  EXPECT_NEAR(r.ineq_duals[0], 0.4, 1e-6);
  EXPECT_NEAR(r.ineq_duals[1], 0.2, 1e-6);
}

TEST(ConicAdapter, EmbeddedBackendConforms) {
  for (const ConicProgram& p : {lp_x_ge_1(), soc_3_4(), infeasible_lp()}) {
    const SolveResult a = solve(p);
    const SolveResult b = adapter_solve(p, "embedded");
    EXPECT_EQ(a.status, b.status);
    EXPECT_EQ(a.primal_objective, b.primal_objective);
  }
}

TEST(ConicAdapter, UnknownBackend) {
  EXPECT_THROW(adapter_solve(lp_x_ge_1(), "nope"), SolverError);
}

TEST(ConicAdapter, MalformedProgramNeverReachesBackend) {
  bool called = false;
  register_backend("spy", [&called](const ConicProgram& p, const SolverSettings& s) {
    called = true;
    return solve(p, s);
  });
  ConicProgram p;
  p.add_variable();
  p.add_less_equal({{3, 1.0}}, 1.0);  // variable 3 does not exist
  EXPECT_THROW(adapter_solve(p, "spy"), ProgramError);
  EXPECT_FALSE(called);
}

TEST(ConicAdapter, RegisteredBackendsListEmbedded) {
  const auto ids = registered_backends();
  EXPECT_NE(std::find(ids.begin(), ids.end(), "embedded"), ids.end());
}

TEST(ConicProgramBuilder, RejectsNonFinite) {
  ConicProgram p;
  const int x = p.add_variable();
  p.add_less_equal({{x, std::nan("")}}, 1.0);
  EXPECT_THROW(p.validate(), ProgramError);
}

TEST(ConicProgramBuilder, MaxViolationAndObjective) {
  ConicProgram p;
  const int x = p.add_variable(0.0);
  p.set_objective(x, 2.0);
  p.set_objective_offset(1.0);
  p.add_less_equal({{x, 1.0}}, 3.0);
  EXPECT_DOUBLE_EQ(p.evaluate_objective({2.0}), 5.0);
  EXPECT_DOUBLE_EQ(p.max_violation({2.0}), 0.0);
  EXPECT_DOUBLE_EQ(p.max_violation({4.0}), 1.0);
  EXPECT_DOUBLE_EQ(p.max_violation({-1.0}), 1.0);
}
