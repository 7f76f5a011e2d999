#include "drssd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "drssd/conic_solver.hpp"
#include "drssd/error.hpp"

namespace drssd::oracle {

TransportWorstCase transport_worst_case_lp(const VectorXd& psi, const MatrixXd& support,
                                           const WassersteinBall& ball) {
  const int N = ball.size();
  const int S = static_cast<int>(support.rows());
  if (psi.size() != S) throw InstanceError("psi length does not match the support");
  const MatrixXd c = pairwise_distances(ball.samples, support);

  ConicProgram lp;
  const int pi = lp.add_variables(N * S, 0.0);
  auto var = [&](int i, int j) { return pi + i * S + j; };
  std::vector<Term> budget;
  for (int i = 0; i < N; ++i) {
    std::vector<Term> row;
    for (int j = 0; j < S; ++j) {
      lp.set_objective(var(i, j), -psi(j));
      row.push_back({var(i, j), 1.0});
      if (c(i, j) != 0.0) budget.push_back({var(i, j), c(i, j)});
    }
    lp.add_equal(std::move(row), 1.0 / N);
  }
  if (!budget.empty()) lp.add_less_equal(std::move(budget), ball.radius);

  const SolveResult r = solve(lp);
  if (!r.optimal() && r.status != SolveStatus::kInaccurate)
    throw SolverError("transport worst-case LP failed: " + to_string(r.status));
  TransportWorstCase out;
  out.plan.resize(N, S);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < S; ++j) out.plan(i, j) = r.x[var(i, j)];
  out.value = -r.primal_objective;
  return out;
}

double pointwise_sup_eta(double u, double v, double a, double b) {
  auto h = [&](double eta) { return std::max(eta - u, 0.0) - std::max(eta - v, 0.0); };
  const double cu = std::clamp(u, a, b);
  const double cv = std::clamp(v, a, b);
  return std::max({h(a), h(b), h(cu), h(cv)});
}

double pointwise_sup_eta(const VectorXd& z, const VectorXd& z0, const VectorXd& xi, double a,
                         double b) {
  return pointwise_sup_eta(z.dot(xi), z0.dot(xi), a, b);
}

GValues evaluate_g_discrete(const VectorXd& z, const VectorXd& z0, const MatrixXd& support,
                            const WassersteinBall& ball, const EtaRange& range, int K) {
  if (K < 1) throw InstanceError("number of intervals must be positive");
  const int S = static_cast<int>(support.rows());
  const MatrixXd dist = pairwise_distances(ball.samples, support);
  const VectorXd u = support * z;
  const VectorXd v = support * z0;

  GValues out;
  std::vector<double> levels{range.r_min, range.r_max};
  for (int j = 0; j < S; ++j)
    if (v(j) >= range.r_min && v(j) <= range.r_max) levels.push_back(v(j));
  out.g = -std::numeric_limits<double>::infinity();
  VectorXd psi(S);
  for (double eta : levels) {
    for (int j = 0; j < S; ++j) psi(j) = std::max(eta - u(j), 0.0) - std::max(eta - v(j), 0.0);
    out.g = std::max(out.g, worst_case_expectation_discrete(psi, dist, ball.radius).value);
  }

  out.g_split = -std::numeric_limits<double>::infinity();
  const double step = range.width() / K;
  for (int k = 0; k < K; ++k) {
    const double a = range.r_min + k * step;
    const double b = k + 1 == K ? range.r_max : range.r_min + (k + 1) * step;
    for (int j = 0; j < S; ++j) psi(j) = pointwise_sup_eta(u(j), v(j), a, b);
    const double val = worst_case_expectation_discrete(psi, dist, ball.radius).value;
    out.per_interval.push_back(val);
    out.g_split = std::max(out.g_split, val);
  }
  return out;
}

SsdCheck ssd_check_discrete(const VectorXd& x, const VectorXd& y, const VectorXd& w, double tol) {
  if (x.size() != y.size() || x.size() != w.size())
    throw InstanceError("outcome vectors and weights differ in length");
  std::vector<double> ts(y.data(), y.data() + y.size());
  ts.push_back(std::max(x.maxCoeff(), y.maxCoeff()));
  SsdCheck out;
  for (double t : ts) {
    double diff = 0.0;
    for (int i = 0; i < x.size(); ++i)
      diff += w(i) * (std::max(t - x(i), 0.0) - std::max(t - y(i), 0.0));
    out.max_violation = std::max(out.max_violation, diff);
  }
  out.dominates = out.max_violation <= tol;
  return out;
}

VertexEnumResult brute_lp_by_vertex_enumeration(const ConicProgram& program) {
  program.validate();
  if (!program.is_linear()) throw ProgramError("vertex enumeration needs a linear program");
  const int n = program.num_variables();
  if (n > 5) throw ProgramError("vertex enumeration limited to 5 variables");

  // Rows a'x <= b, plus equalities that are always active.
  std::vector<VectorXd> a_rows;
  std::vector<double> b_rows;
  auto dense = [n](const std::vector<Term>& terms) {
    VectorXd a = VectorXd::Zero(n);
    for (const auto& t : terms) a(t.var) += t.coef;
    return a;
  };
  for (const auto& r : program.inequalities()) {
    a_rows.push_back(dense(r.terms));
    b_rows.push_back(r.rhs);
  }
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(program.upper_bounds()[j])) {
      a_rows.push_back(VectorXd::Unit(n, j));
      b_rows.push_back(program.upper_bounds()[j]);
    }
    if (std::isfinite(program.lower_bounds()[j])) {
      a_rows.push_back(-VectorXd::Unit(n, j));
      b_rows.push_back(-program.lower_bounds()[j]);
    }
  }
  const int p = program.num_equalities();
  const int m = static_cast<int>(a_rows.size());
  if (m + p > 12) throw ProgramError("vertex enumeration limited to 12 constraint rows");
  const int pick = n - p;
  if (pick < 0) throw ProgramError("more equalities than variables");

  long long total = 1;
  for (int k = 0; k < pick; ++k) total = total * (m - k) / (k + 1);
  if (pick > m) total = 0;
  if (total > 10000) throw ProgramError("too many bases to enumerate");

  VertexEnumResult best;
  best.value = std::numeric_limits<double>::infinity();
  Eigen::Map<const VectorXd> c(program.objective().data(), n);
  std::vector<int> idx(pick);
  for (int k = 0; k < pick; ++k) idx[k] = k;
  for (long long count = 0; count < std::max(total, 1LL); ++count) {
    MatrixXd A(n, n);
    VectorXd b(n);
    for (int r = 0; r < p; ++r) {
      A.row(r) = dense(program.equalities()[r].terms).transpose();
      b(r) = program.equalities()[r].rhs;
    }
    for (int k = 0; k < pick; ++k) {
      A.row(p + k) = a_rows[idx[k]].transpose();
      b(p + k) = b_rows[idx[k]];
    }
    ++best.combinations;
    Eigen::FullPivLU<MatrixXd> lu(A);
    if (n == 0 || lu.rank() == n) {
      const VectorXd x = n ? VectorXd(lu.solve(b)) : VectorXd();
      std::vector<double> xs(x.data(), x.data() + n);
      const double scale = 1.0 + (n ? x.cwiseAbs().maxCoeff() : 0.0);
      if (program.max_violation(xs) <= 1e-9 * scale) {
        const double v = c.dot(x) + program.objective_offset();
        if (v < best.value) {
          best.value = v;
          best.x = xs;
          best.status = SolveStatus::kOptimal;
        }
      }
    }
    // Next combination in lexicographic order.
    int k = pick - 1;
    while (k >= 0 && idx[k] == m - pick + k) --k;
    if (k < 0) break;
    ++idx[k];
    for (int q = k + 1; q < pick; ++q) idx[q] = idx[q - 1] + 1;
  }
  if (best.status != SolveStatus::kOptimal) best.value = 0.0;
  return best;
}

}  // namespace drssd::oracle
