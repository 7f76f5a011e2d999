#pragma once

#include "drssd/model.hpp"

namespace drssd::test {

/// Two-asset illustrative instance: box support [0,250]x[0,500], ten samples,
/// objective 0.5*||z||, Z = {z >= 0, z1 + z2 <= 1}, z0 = (1, 0).
inline SsdInstance example1(double radius = 1e-5) {
  SsdInstance s;
  s.benchmark = Eigen::Vector2d(1, 0);
  s.objective.linear = Eigen::Vector2d(0, 0);
  s.objective.norm_weight = 0.5;
  s.decision_set.A_ineq = MatrixXd(3, 2);
  s.decision_set.A_ineq << -1, 0, 0, -1, 1, 1;
  s.decision_set.b_ineq = Eigen::Vector3d(0, 0, 1);
  s.decision_set.A_eq = MatrixXd(0, 2);
  s.decision_set.b_eq = VectorXd(0);
  s.ball.samples = MatrixXd(10, 2);
  s.ball.samples << 0, 0, 250, 0, 0, 500, 100, 100, 200, 200, 100, 0, 200, 0, 0, 100, 0, 200,
      200, 500;
  s.ball.radius = radius;
  s.support = SupportPolytope::box(Eigen::Vector2d(0, 0), Eigen::Vector2d(250, 500));
  return s;
}

/// Grids made of explicit points (which must contain every sample) and levels.
inline SampleGrids grids_from(const SsdInstance& inst, const MatrixXd& points,
                              const VectorXd& levels) {
  SampleGrids g;
  g.xi = points;
  g.eta = levels;
  for (int i = 0; i < inst.ball.size(); ++i) {
    int row = -1;
    for (int r = 0; r < points.rows() && row < 0; ++r)
      if ((points.row(r) - inst.ball.samples.row(i)).cwiseAbs().maxCoeff() <= 1e-12) row = r;
    g.sample_rows.push_back(row);
  }
  return g;
}

/// Levels {z0'xi_j} over the rows of `points`, sorted and deduplicated.
inline VectorXd benchmark_levels(const SsdInstance& inst, const MatrixXd& points) {
  const VectorXd v = points * inst.benchmark;
  return unique_sorted(std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace drssd::test
