#pragma once

#include <array>
#include <vector>

#include "drssd/model.hpp"
#include "drssd/report.hpp"

namespace drssd {

struct IntervalSplit {
  int K = 0;
  std::vector<double> lower;
  std::vector<double> upper;

  bool degenerate() const { return K > 0 && upper.back() - lower.front() <= 0.0; }
  /// Intervals actually used by the master problems: one when the range is a
  /// single point, all K otherwise.
  int effective() const { return degenerate() ? 1 : K; }
};

/// K equal-width contiguous intervals covering [r_min, r_max].
IntervalSplit split_eta_intervals(const EtaRange& range, int K);

/// Multipliers of the two dual subproblems for one (sample, interval) pair.
struct DualBlock {
  std::array<double, 3> mu{};   // first dual
  VectorXd nu;                  // first dual, one per support row
  std::array<double, 3> mut{};  // second dual
  VectorXd nut;
  double V = 0.0;
};

/// Multipliers for every (i, k), stored at i * K + k.
struct Multipliers {
  int N = 0;
  int K = 0;
  std::vector<DualBlock> blocks;
  std::vector<double> lambda;

  const DualBlock& at(int i, int k) const { return blocks[static_cast<std::size_t>(i) * K + k]; }
};

/// Variable positions of one dual block inside a master program. Entries
/// that are fixed in the program are -1.
struct BlockVars {
  int mu = -1;   // 3 consecutive
  int nu = -1;   // l consecutive
  int mut = -1;
  int nut = -1;
  int V = -1;
};

struct MasterLayout {
  DecisionVars decision;   // z is a variable only with fixed multipliers
  int lambda = -1;         // K consecutive
  int K = 0;
  std::vector<BlockVars> blocks;  // i * K + k
};

struct MasterProgram {
  ConicProgram program;
  MasterLayout layout;
};

enum class FixedZObjective {
  kZero,       // pure feasibility problem
  kMaxSlack,   // minimize sum_k (lambda_k eps + mean_i V^ik)
};

/// Upper-bound master with z fixed: variables lambda and every dual block.
/// Objective is the constant f(z) for kZero.
MasterProgram build_master_fixed_z(const SsdInstance& instance, const IntervalSplit& split,
                                   const VectorXd& z,
                                   FixedZObjective objective = FixedZObjective::kZero);

/// Upper-bound master with mu and mu~ fixed: variables z, lambda, nu, nu~, V.
MasterProgram build_master_fixed_multipliers(const SsdInstance& instance,
                                             const IntervalSplit& split,
                                             const Multipliers& multipliers);

/// Reads the multipliers (and z-independent parts) out of a solved master.
Multipliers extract_multipliers(const SsdInstance& instance, const MasterLayout& layout,
                                const std::vector<double>& x);

struct ScaOptions {
  int max_iter = 100;
  double tol = 1e-6;
  FixedZObjective fixed_z_objective = FixedZObjective::kZero;
  SolverSettings solver;
};

struct ScaResult {
  BoundReport report;
  std::vector<VectorXd> iterates;  // z^1, z^2, ...
};

/// Sequential convex approximation from z_start. Throws SolverError("start
/// infeasible - increase K or change start") when the first fixed-z master is
/// infeasible. Later failures stop the loop and keep the last iterate, whose
/// value is still a valid upper bound.
ScaResult sca_solve(const SsdInstance& instance, const IntervalSplit& split,
                    const VectorXd& z_start, const ScaOptions& options = {});

struct SubproblemValues {
  double v1 = 0.0;  // branch with eta >= z'xi
  double v2 = 0.0;  // branch with eta <= z'xi
  double v = 0.0;   // max of the two
  SolveStatus status1 = SolveStatus::kOptimal;
  SolveStatus status2 = SolveStatus::kOptimal;
};

/// The two inner maximization problems for sample i and interval k, solved
/// as printed (variables xi, eta, s, m). An infeasible branch is -infinity.
/// Throws SolverError when a branch is unbounded.
SubproblemValues primal_subproblem(const SsdInstance& instance, const IntervalSplit& split,
                                   const VectorXd& z, double lambda, int i, int k,
                                   const SolverSettings& settings = {});

/// The two dual minimization problems, solved standalone. An infeasible
/// branch is +infinity.
SubproblemValues dual_subproblem(const SsdInstance& instance, const IntervalSplit& split,
                                 const VectorXd& z, double lambda, int i, int k,
                                 const SolverSettings& settings = {});

struct StrictFeasibility {
  double radius1 = 0.0;  // Chebyshev radius of the first branch's linear part
  double radius2 = 0.0;
  bool strict(double tol = 1e-9) const { return radius1 > tol && radius2 > tol; }
};

/// Probes both primal subproblems for an interior point by the Chebyshev
/// centre LP of {(xi, eta) : C xi <= d, eta in [lo_k, hi_k], branch sign row}.
StrictFeasibility strict_feasibility(const SsdInstance& instance, const IntervalSplit& split,
                                     const VectorXd& z, int k);

struct RobustValue {
  std::vector<double> per_interval;  // min over lambda_k of lambda_k eps + mean V_S^ik
  std::vector<double> lambda;
  double g = 0.0;                    // max over intervals
};

/// Evaluates the split robust constraint at z, one conic solve per interval.
/// g <= 0 certifies z feasible for the upper-bound problem.
RobustValue robust_constraint_value(const SsdInstance& instance, const IntervalSplit& split,
                                    const VectorXd& z, const SolverSettings& settings = {});

}  // namespace drssd
