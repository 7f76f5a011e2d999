#pragma once

#include <vector>

#include "drssd/model.hpp"

namespace drssd {

/// Finitely supported distribution: atoms are rows, weights sum to one.
struct DiscreteDistribution {
  MatrixXd atoms;
  VectorXd weights;

  int size() const { return static_cast<int>(atoms.rows()); }
  /// Throws InstanceError unless weights are nonnegative and sum to one
  /// (within 1e-12) and the shapes agree.
  void validate() const;

  static DiscreteDistribution empirical(const MatrixXd& samples);
};

struct TransportResult {
  double cost = 0.0;
  MatrixXd plan;  // p.size() x q.size()
};

/// Wasserstein-1 distance with Euclidean ground cost, from the transport LP.
TransportResult kantorovich_discrete(const DiscreteDistribution& p,
                                     const DiscreteDistribution& q);

struct WorstCaseResult {
  double value = 0.0;
  double lambda = 0.0;  // minimizing multiplier of the ball constraint
};

/// sup of E_P[psi] over distributions on the rows of `support` within
/// Wasserstein distance `ball.radius` of the empirical distribution.
///
/// Solved in the dual: min over lambda >= 0 of
///   lambda * eps + (1/N) sum_i max_j (psi_j - lambda * ||support_j - xhat_i||).
/// The objective is convex piecewise linear, so it is minimized exactly by
/// scanning the kinks of each per-sample upper envelope together with zero.
///
/// Every sample must coincide with a support row (InstanceError otherwise).
WorstCaseResult worst_case_expectation_discrete(const VectorXd& psi, const MatrixXd& support,
                                                const WassersteinBall& ball);

/// Same, with the sample-to-support distances precomputed (N x support).
WorstCaseResult worst_case_expectation_discrete(const VectorXd& psi, const MatrixXd& dist,
                                                double radius);

}  // namespace drssd
