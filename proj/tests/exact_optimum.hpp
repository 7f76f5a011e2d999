#pragma once

#include <algorithm>
#include <cmath>

#include "drssd/oracle.hpp"
#include "drssd/random_instance.hpp"

namespace drssd::test {

/// Exact optimum of min c'z over the 2-asset simplex z = (t, 1 - t) subject
/// to the robust SSD constraint on a finite support, g(z) <= 0, computed
/// without any LP: g is convex in t, so its zero sublevel set is an interval
/// containing the benchmark; both ends are found by bisection and the linear
/// objective is minimized at one of them.
inline double exact_two_asset_optimum(const RandomInstance& ri, double tol = 1e-12) {
  const SsdInstance& inst = ri.instance;
  const VectorXd v = ri.points * inst.benchmark;
  const EtaRange range{v.minCoeff(), v.maxCoeff()};
  auto z_of = [](double t) { return VectorXd(Eigen::Vector2d(t, 1.0 - t)); };
  auto feasible = [&](double t) {
    return oracle::evaluate_g_discrete(z_of(t), inst.benchmark, ri.points, inst.ball, range, 1).g <=
           1e-12;
  };
  const double t0 = inst.benchmark[0];
  auto edge = [&](double target) {
    if (feasible(target)) return target;
    double in = t0, out = target;
    while (std::abs(out - in) > tol) {
      const double mid = 0.5 * (in + out);
      (feasible(mid) ? in : out) = mid;
    }
    return in;
  };
  const double lo = edge(0.0), hi = edge(1.0);
  return std::min(inst.objective.evaluate(z_of(lo)), inst.objective.evaluate(z_of(hi)));
}

/// Grids equal to the finite support and the benchmark levels it induces.
inline SampleGrids full_support_grids(const RandomInstance& ri) {
  SampleGrids g;
  g.xi = ri.points;
  const VectorXd v = ri.points * ri.instance.benchmark;
  g.eta = unique_sorted(std::vector<double>(v.data(), v.data() + v.size()));
  for (int i = 0; i < ri.instance.ball.size(); ++i)
    for (int r = 0; r < ri.points.rows(); ++r)
      if (ri.points.row(r) == ri.instance.ball.samples.row(i)) {
        g.sample_rows.push_back(r);
        break;
      }
  return g;
}

}  // namespace drssd::test
