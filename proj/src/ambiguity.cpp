#include "drssd/ambiguity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "drssd/conic_solver.hpp"
#include "drssd/error.hpp"

namespace drssd {

void DiscreteDistribution::validate() const {
  if (atoms.rows() != weights.size())
    throw InstanceError("distribution has " + std::to_string(atoms.rows()) + " atoms but " +
                        std::to_string(weights.size()) + " weights");
  if (weights.size() == 0) throw InstanceError("distribution has no atoms");
  if ((weights.array() < 0.0).any()) throw InstanceError("negative probability weight");
  if (std::abs(weights.sum() - 1.0) > 1e-12) throw InstanceError("weights do not sum to one");
}

DiscreteDistribution DiscreteDistribution::empirical(const MatrixXd& samples) {
  DiscreteDistribution d;
  d.atoms = samples;
  d.weights = VectorXd::Constant(samples.rows(), 1.0 / samples.rows());
  return d;
}

TransportResult kantorovich_discrete(const DiscreteDistribution& p,
                                     const DiscreteDistribution& q) {
  p.validate();
  q.validate();
  if (p.atoms.cols() != q.atoms.cols()) throw InstanceError("atom dimensions differ");
  const int m = p.size();
  const int n = q.size();
  const MatrixXd cost = pairwise_distances(p.atoms, q.atoms);

  ConicProgram lp;
  const int pi = lp.add_variables(m * n, 0.0);
  auto var = [&](int i, int j) { return pi + i * n + j; };
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) lp.set_objective(var(i, j), cost(i, j));
  for (int i = 0; i < m; ++i) {
    std::vector<Term> row;
    for (int j = 0; j < n; ++j) row.push_back({var(i, j), 1.0});
    lp.add_equal(std::move(row), p.weights(i));
  }
  // The last column sum is implied by the others.
  for (int j = 0; j + 1 < n; ++j) {
    std::vector<Term> col;
    for (int i = 0; i < m; ++i) col.push_back({var(i, j), 1.0});
    lp.add_equal(std::move(col), q.weights(j));
  }
  const SolveResult r = solve(lp);
  if (!r.optimal() && r.status != SolveStatus::kInaccurate)
    throw SolverError("transport LP failed: " + to_string(r.status));

  TransportResult out;
  out.plan.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.plan(i, j) = std::max(0.0, r.x[var(i, j)]);
  out.cost = (out.plan.array() * cost.array()).sum();
  return out;
}

namespace {

// Kinks in (0, inf) of max_j (b_j + m_j * x).
void envelope_kinks(std::vector<std::pair<double, double>> lines, std::vector<double>& out) {
  // Sort by slope, then intercept; keep the best intercept per slope.
  std::sort(lines.begin(), lines.end());
  std::vector<std::pair<double, double>> uniq;
  for (const auto& l : lines) {
    if (!uniq.empty() && uniq.back().first == l.first)
      uniq.back() = l;
    else
      uniq.push_back(l);
  }
  auto cross = [](const std::pair<double, double>& a, const std::pair<double, double>& b) {
    return (a.second - b.second) / (b.first - a.first);
  };
  std::vector<std::pair<double, double>> hull;
  for (const auto& l : uniq) {
    while (hull.size() >= 2 &&
           cross(hull[hull.size() - 2], l) <= cross(hull[hull.size() - 2], hull.back()))
      hull.pop_back();
    hull.push_back(l);
  }
  for (std::size_t k = 1; k < hull.size(); ++k) {
    const double x = cross(hull[k - 1], hull[k]);
    if (x > 0.0 && std::isfinite(x)) out.push_back(x);
  }
}

double dual_objective(const VectorXd& psi, const MatrixXd& dist, double radius, double lambda) {
  const int N = static_cast<int>(dist.rows());
  double total = 0.0;
  for (int i = 0; i < N; ++i) total += (psi.transpose() - lambda * dist.row(i)).maxCoeff();
  return lambda * radius + total / N;
}

}  // namespace

WorstCaseResult worst_case_expectation_discrete(const VectorXd& psi, const MatrixXd& dist,
                                                double radius) {
  const int N = static_cast<int>(dist.rows());
  const int S = static_cast<int>(dist.cols());
  if (N == 0) throw InstanceError("no samples");
  if (psi.size() != S)
    throw InstanceError("psi has " + std::to_string(psi.size()) + " values for " +
                        std::to_string(S) + " support points");
  if (!(radius >= 0.0)) throw InstanceError("radius must be nonnegative");
  for (int i = 0; i < N; ++i)
    if (dist.row(i).minCoeff() > 1e-9)
      throw InstanceError("sample " + std::to_string(i) + " is not a support point");

  std::vector<double> candidates{0.0};
  std::vector<std::pair<double, double>> lines(S);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < S; ++j) lines[j] = {-dist(i, j), psi(j)};
    envelope_kinks(lines, candidates);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  WorstCaseResult best{std::numeric_limits<double>::infinity(), 0.0};
  for (double lambda : candidates) {
    const double v = dual_objective(psi, dist, radius, lambda);
    if (v < best.value) best = {v, lambda};
  }
  return best;
}

WorstCaseResult worst_case_expectation_discrete(const VectorXd& psi, const MatrixXd& support,
                                                const WassersteinBall& ball) {
  if (support.cols() != ball.dim()) throw InstanceError("support and samples differ in dimension");
  return worst_case_expectation_discrete(psi, pairwise_distances(ball.samples, support),
                                         ball.radius);
}

}  // namespace drssd
