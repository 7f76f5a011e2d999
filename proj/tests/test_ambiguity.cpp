#include <gtest/gtest.h>

#include <random>

#include "drssd/ambiguity.hpp"
#include "drssd/error.hpp"
#include "drssd/oracle.hpp"
#include "drssd/random_instance.hpp"

using namespace drssd;

namespace {

DiscreteDistribution dist(std::initializer_list<double> atoms, std::initializer_list<double> w) {
  DiscreteDistribution d;
  d.atoms = Eigen::Map<const VectorXd>(atoms.begin(), atoms.size());
  d.weights = Eigen::Map<const VectorXd>(w.begin(), w.size());
  return d;
}

DiscreteDistribution random_dist(std::mt19937_64& rng, int n, int dim) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DiscreteDistribution d;
  d.atoms = MatrixXd(n, dim);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < dim; ++c) d.atoms(i, c) = std::round(4.0 * u(rng));
  d.weights = VectorXd(n);
  for (int i = 0; i < n; ++i) d.weights[i] = 0.1 + u(rng);
  d.weights /= d.weights.sum();
  return d;
}

}  // namespace

TEST(Kantorovich, IdenticalIsZero) {
  const auto p = dist({0, 1, 3}, {0.2, 0.3, 0.5});
  EXPECT_NEAR(kantorovich_discrete(p, p).cost, 0.0, 1e-9);
}

TEST(Kantorovich, DiracsGiveDistance) {
  DiscreteDistribution p, q;
  p.atoms = MatrixXd(1, 2);
  p.atoms << 0, 0;
  q.atoms = MatrixXd(1, 2);
  q.atoms << 3, 4;
  p.weights = q.weights = VectorXd::Ones(1);
  EXPECT_NEAR(kantorovich_discrete(p, q).cost, 5.0, 1e-9);
}

TEST(Kantorovich, SplitToPointMass) {
  EXPECT_NEAR(kantorovich_discrete(dist({0, 2}, {0.5, 0.5}), dist({1}, {1.0})).cost, 1.0, 1e-9);
}

TEST(Kantorovich, MetricProperties) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 15; ++t) {
    const auto a = random_dist(rng, 3, 2), b = random_dist(rng, 4, 2), c = random_dist(rng, 2, 2);
    const double ab = kantorovich_discrete(a, b).cost;
    const double ba = kantorovich_discrete(b, a).cost;
    const double bc = kantorovich_discrete(b, c).cost;
    const double ac = kantorovich_discrete(a, c).cost;
    EXPECT_NEAR(ab, ba, 1e-7);
    EXPECT_GE(ab, -1e-9);
    EXPECT_LE(ac, ab + bc + 1e-7);
  }
}

TEST(Kantorovich, PlanHasMarginals) {
  const auto p = dist({0, 1}, {0.25, 0.75});
  const auto q = dist({0, 5, 6}, {0.5, 0.25, 0.25});
  const TransportResult r = kantorovich_discrete(p, q);
  EXPECT_NEAR((r.plan.rowwise().sum() - p.weights).cwiseAbs().maxCoeff(), 0.0, 1e-8);
  EXPECT_NEAR((r.plan.colwise().sum().transpose() - q.weights).cwiseAbs().maxCoeff(), 0.0, 1e-8);
}

TEST(Kantorovich, BadWeights) {
  EXPECT_THROW(kantorovich_discrete(dist({0, 1}, {0.5, 0.6}), dist({0}, {1.0})), InstanceError);
  EXPECT_THROW(kantorovich_discrete(dist({0, 1}, {1.5, -0.5}), dist({0}, {1.0})), InstanceError);
}

TEST(WorstCase, ZeroRadiusIsEmpiricalMean) {
  MatrixXd support(4, 1);
  support << 0, 1, 2, 3;
  WassersteinBall ball;
  ball.samples = MatrixXd(2, 1);
  ball.samples << 1, 3;
  ball.radius = 0.0;
  const VectorXd psi = Eigen::Vector4d(5, -1, 7, 2);
  EXPECT_NEAR(worst_case_expectation_discrete(psi, support, ball).value, 0.5, 1e-12);
}

TEST(WorstCase, TwoAtomExample) {
  MatrixXd support(2, 1);
  support << 0, 1;
  WassersteinBall ball;
  ball.samples = MatrixXd::Zero(1, 1);
  ball.radius = 0.4;
  const WorstCaseResult r = worst_case_expectation_discrete(Eigen::Vector2d(0, 1), support, ball);
  EXPECT_NEAR(r.value, 0.4, 1e-12);
  EXPECT_NEAR(r.lambda, 1.0, 1e-12);
}

TEST(WorstCase, LargeRadiusTakesBestAtom) {
  MatrixXd support(3, 2);
  support << 0, 0, 1, 0, 0, 2;
  WassersteinBall ball;
  ball.samples = MatrixXd::Zero(1, 2);
  ball.radius = 2.0;
  const auto r = worst_case_expectation_discrete(Eigen::Vector3d(1, 4, 3), support, ball);
  EXPECT_NEAR(r.value, 4.0, 1e-12);
  EXPECT_EQ(r.lambda, 0.0);
}

TEST(WorstCase, SampleMissingFromSupport) {
  MatrixXd support(2, 1);
  support << 0, 1;
  WassersteinBall ball;
  ball.samples = MatrixXd::Constant(1, 1, 0.5);
  ball.radius = 0.1;
  EXPECT_THROW(worst_case_expectation_discrete(Eigen::Vector2d(0, 1), support, ball),
               InstanceError);
}

TEST(WorstCase, MatchesTransportLpAndIsMonotone) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int t = 0; t < 40; ++t) {
    RandomInstanceOptions opt;
    opt.dim = 1 + t % 3;
    opt.samples = 1 + t % 5;
    opt.extra_points = t % 7;
    opt.box = 20;
    const RandomInstance ri = random_instance(1000 + t, opt);
    VectorXd psi(ri.points.rows());
    for (double& v : psi) v = u(rng);
    WassersteinBall ball = ri.instance.ball;
    double last = -1e300;
    for (double eps : {0.0, 0.1, 0.5, 1.0, 3.0, 20.0}) {
      ball.radius = eps;
      const double dual = worst_case_expectation_discrete(psi, ri.points, ball).value;
      const double primal = oracle::transport_worst_case_lp(psi, ri.points, ball).value;
      EXPECT_NEAR(dual, primal, 1e-6) << "trial " << t << " eps " << eps;
      EXPECT_GE(dual, last - 1e-12);
      last = dual;
    }
    EXPECT_NEAR(last, psi.maxCoeff(), 1e-9);  // radius beyond the diameter
  }
}

TEST(WorstCase, AtLeastEmpiricalMean) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const RandomInstance ri = random_instance(8, {});
  VectorXd psi(ri.points.rows());
  for (double& v : psi) v = u(rng);
  double mean = 0.0;
  const MatrixXd& xs = ri.instance.ball.samples;
  for (int i = 0; i < xs.rows(); ++i)
    for (int j = 0; j < ri.points.rows(); ++j)
      if (ri.points.row(j) == xs.row(i)) {
        mean += psi[j] / xs.rows();
        break;
      }
  EXPECT_GE(worst_case_expectation_discrete(psi, ri.points, ri.instance.ball).value, mean - 1e-12);
}
