#include "drssd/random_instance.hpp"

#include <random>
#include <set>
#include <vector>

#include "drssd/error.hpp"

namespace drssd {

RandomInstance random_instance(std::uint64_t seed, const RandomInstanceOptions& opt) {
  if (opt.dim < 1 || opt.samples < 1 || opt.extra_points < 0 || opt.box < 1)
    throw InstanceError("random_instance: bad options");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> coord(0, opt.box);
  const int n = opt.dim;

  std::vector<std::vector<int>> pts;
  std::set<std::vector<int>> seen;
  auto draw = [&](bool unique) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      std::vector<int> p(n);
      for (int& c : p) c = coord(rng);
      if (!unique || seen.insert(p).second) return p;
    }
    throw InstanceError("random_instance: lattice too small for the requested points");
  };
  RandomInstance out;
  SsdInstance& inst = out.instance;
  inst.ball.samples.resize(opt.samples, n);
  for (int i = 0; i < opt.samples; ++i) {
    std::vector<int> p = draw(false);
    for (int c = 0; c < n; ++c) inst.ball.samples(i, c) = p[c];
    if (seen.insert(p).second) pts.push_back(p);
  }
  for (int e = 0; e < opt.extra_points; ++e) pts.push_back(draw(true));
  out.points.resize(static_cast<int>(pts.size()), n);
  for (int r = 0; r < out.points.rows(); ++r)
    for (int c = 0; c < n; ++c) out.points(r, c) = pts[r][c];

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  inst.ball.radius = opt.radius_max * unit(rng);
  inst.support = SupportPolytope::box(VectorXd::Zero(n), VectorXd::Constant(n, opt.box));

  inst.decision_set.A_ineq = -MatrixXd::Identity(n, n);
  inst.decision_set.b_ineq = VectorXd::Zero(n);
  inst.decision_set.A_eq = MatrixXd::Ones(1, n);
  inst.decision_set.b_eq = VectorXd::Ones(1);

  std::exponential_distribution<double> expo(1.0);
  VectorXd z0(n);
  for (int c = 0; c < n; ++c) z0[c] = expo(rng);
  inst.benchmark = z0 / z0.sum();

  inst.objective.linear = -inst.ball.samples.colwise().mean().transpose();
  inst.objective.norm_weight = 0.0;
  return out;
}

}  // namespace drssd
