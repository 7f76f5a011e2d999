#pragma once

#include <vector>

#include "drssd/ambiguity.hpp"
#include "drssd/conic_program.hpp"
#include "drssd/model.hpp"

namespace drssd::oracle {

/// Worst-case expectation as the primal transport LP:
///   max sum_ij pi_ij psi_j  s.t.  sum_j pi_ij = 1/N,  sum_ij pi_ij c_ij <= eps,  pi >= 0.
/// Independent of the dual scan in worst_case_expectation_discrete.
struct TransportWorstCase {
  double value = 0.0;
  MatrixXd plan;  // N x support
};
TransportWorstCase transport_worst_case_lp(const VectorXd& psi, const MatrixXd& support,
                                           const WassersteinBall& ball);

/// sup over eta in [a, b] of (eta - u)_+ - (eta - v)_+, evaluated at the
/// candidates {a, b, clip(u), clip(v)}.
double pointwise_sup_eta(double u, double v, double a, double b);
double pointwise_sup_eta(const VectorXd& z, const VectorXd& z0, const VectorXd& xi, double a,
                         double b);

/// Robust SSD function on a finite support (rows of `support`).
struct GValues {
  double g = 0.0;              // g(z): sup over the whole range
  double g_split = 0.0;        // g(z, K): max over the K sub-intervals
  std::vector<double> per_interval;  // one value per sub-interval
};

/// g(z) is exact on a finite support: for a fixed distribution the map
/// eta -> E[(eta - z'xi)_+ - (eta - z0'xi)_+] is convex between consecutive
/// values z0'xi_j, so its sup sits on one of those values or an end of the
/// range. g(z, K) uses the interval-wise pointwise sup.
GValues evaluate_g_discrete(const VectorXd& z, const VectorXd& z0, const MatrixXd& support,
                            const WassersteinBall& ball, const EtaRange& range, int K);

struct SsdCheck {
  bool dominates = false;
  double max_violation = 0.0;  // max over t of E(t - X)_+ - E(t - Y)_+
};

/// X = x_values dominates Y = y_values in second order under the weights:
/// E(t - X)_+ <= E(t - Y)_+ at every t in y_values (the only places the
/// difference can peak). Dominance holds when max_violation <= tol.
SsdCheck ssd_check_discrete(const VectorXd& x_values, const VectorXd& y_values,
                            const VectorXd& weights, double tol = 1e-9);

struct VertexEnumResult {
  SolveStatus status = SolveStatus::kInfeasible;
  double value = 0.0;
  std::vector<double> x;
  long long combinations = 0;
};

/// Exact LP optimum by trying every basis. Limited to linear programs with at
/// most 5 variables and 12 constraint rows (finite bounds count as rows);
/// ProgramError otherwise. Assumes the optimum is attained at a vertex.
VertexEnumResult brute_lp_by_vertex_enumeration(const ConicProgram& program);

}  // namespace drssd::oracle
