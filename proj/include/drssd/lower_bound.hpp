#pragma once

#include <vector>

#include "drssd/model.hpp"
#include "drssd/report.hpp"

namespace drssd {

/// Where each variable block of the sample-approximation LP lives. Blocks are
/// built only for the included support points (j) and levels (k); the full
/// LP includes all of them.
struct LowerLpLayout {
  DecisionVars decision;
  std::vector<int> xi_index;   // included support rows, in column order
  std::vector<int> eta_index;  // included levels
  int lambda = -1;  // lambda[kk] at lambda + kk
  int beta = -1;    // beta[i][kk] at beta + i * K + kk
  int s = -1;       // s[jj][kk] at s + jj * K + kk
  int num_samples = 0;

  int num_levels() const { return static_cast<int>(eta_index.size()); }
  int num_points() const { return static_cast<int>(xi_index.size()); }
  int lambda_var(int kk) const { return lambda + kk; }
  int beta_var(int i, int kk) const { return beta + i * num_levels() + kk; }
  int s_var(int jj, int kk) const { return s + jj * num_levels() + kk; }

  /// Rows excluding the decision set: M + N*S*M + S*M.
  long long num_rows() const;
  /// n + M + N*M + S*M (plus the epigraph variable when present).
  long long num_block_variables(int n) const;
};

struct LowerProgram {
  ConicProgram program;
  LowerLpLayout layout;
};

/// The sample-approximation LP restricted to the given support rows and
/// levels. Levels left out get no multiplier block at all.
LowerProgram build_lower_lp(const SsdInstance& instance, const SampleGrids& grids,
                            const std::vector<int>& xi_index, const std::vector<int>& eta_index);
LowerProgram build_lower_lp(const SsdInstance& instance, const SampleGrids& grids);

/// Solves the monolithic LP.
BoundReport solve_lower(const SsdInstance& instance, const SampleGrids& grids,
                        const SolverSettings& settings = {});

struct CutSets {
  std::vector<int> J1;  // support rows, in insertion order
  std::vector<int> J2;  // levels, in insertion order
  std::vector<double> violations;  // delta at each iteration
};

struct CuttingPlaneOptions {
  int max_iter = 100000;
  double violation_tol = 1e-7;
  /// Number of most violated (j, k) pairs added per iteration.
  int batch = 1;
  SolverSettings solver;
};

struct CuttingPlaneResult {
  BoundReport report;
  CutSets cuts;
};

/// Constraint generation on the sample-approximation LP, starting from
/// `start` (empty by default).
CuttingPlaneResult cutting_plane(const SsdInstance& instance, const SampleGrids& grids,
                                 const CuttingPlaneOptions& options = {},
                                 const CutSets& start = {});

/// max over levels k of the worst-case E[(eta_k - z'xi)_+ - (eta_k - z0'xi)_+]
/// over distributions on the support grid. Nonpositive exactly when z is
/// feasible for the sample-approximation LP.
double sampled_robust_violation(const SsdInstance& instance, const SampleGrids& grids,
                                const VectorXd& z);

/// Non-robust SSD problem: z'xi dominates z0'xi under the empirical
/// distribution, levels at the observed benchmark values.
BoundReport classic_ssd_lp(const SsdInstance& instance, const SolverSettings& settings = {});

}  // namespace drssd
