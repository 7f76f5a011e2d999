#include "drssd/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "drssd/conic_solver.hpp"
#include "drssd/error.hpp"

namespace drssd {

bool SupportPolytope::contains(const VectorXd& xi, double tol) const {
  if (xi.size() != C.cols()) return false;
  if (C.rows() == 0) return true;
  return ((C * xi - d).array() <= tol).all();
}

SupportPolytope SupportPolytope::box(const VectorXd& lo, const VectorXd& hi) {
  const int n = static_cast<int>(lo.size());
  if (hi.size() != n) throw InstanceError("box bounds differ in length");
  SupportPolytope p;
  p.C = MatrixXd::Zero(2 * n, n);
  p.d = VectorXd::Zero(2 * n);
  for (int i = 0; i < n; ++i) {
    p.C(i, i) = 1.0;
    p.d(i) = hi(i);
    p.C(n + i, i) = -1.0;
    p.d(n + i) = -lo(i);
  }
  return p;
}

bool DecisionSet::contains(const VectorXd& z, double tol) const {
  if (A_ineq.rows() > 0 && ((A_ineq * z - b_ineq).array() > tol).any()) return false;
  if (A_eq.rows() > 0 && ((A_eq * z - b_eq).array().abs() > tol).any()) return false;
  return true;
}

double Objective::evaluate(const VectorXd& z) const {
  double v = linear.size() ? linear.dot(z) : 0.0;
  if (norm_weight != 0.0) v += norm_weight * z.norm();
  return v;
}

GridMode parse_grid_mode(const std::string& s) {
  if (s == "grid") return GridMode::kGrid;
  if (s == "random") return GridMode::kRandom;
  throw ConfigError("unknown grid mode '" + s + "' (expected grid or random)");
}

std::string to_string(GridMode mode) {
  return mode == GridMode::kGrid ? "grid" : "random";
}

void check_dimensions(const SsdInstance& inst) {
  const int n = inst.dim();
  if (n == 0) throw InstanceError("benchmark is empty");
  if (inst.objective.linear.size() != 0 && inst.objective.linear.size() != n)
    throw InstanceError("objective has " + std::to_string(inst.objective.linear.size()) +
                        " coefficients, expected " + std::to_string(n));
  if (inst.ball.size() == 0) throw InstanceError("no samples");
  if (inst.ball.dim() != n)
    throw InstanceError("samples have dimension " + std::to_string(inst.ball.dim()) +
                        ", expected " + std::to_string(n));
  if (!(inst.ball.radius >= 0.0) || !std::isfinite(inst.ball.radius))
    throw InstanceError("radius must be finite and nonnegative");
  if (inst.support.C.cols() != n || inst.support.C.rows() != inst.support.d.size())
    throw InstanceError("support matrix shape does not match");
  const auto& Z = inst.decision_set;
  if ((Z.A_ineq.rows() > 0 && Z.A_ineq.cols() != n) || Z.A_ineq.rows() != Z.b_ineq.size())
    throw InstanceError("decision set inequality shape does not match");
  if ((Z.A_eq.rows() > 0 && Z.A_eq.cols() != n) || Z.A_eq.rows() != Z.b_eq.size())
    throw InstanceError("decision set equality shape does not match");
  if (!inst.support.C.allFinite() || !inst.support.d.allFinite() ||
      !inst.ball.samples.allFinite() || !inst.benchmark.allFinite())
    throw InstanceError("non-finite instance data");
}

namespace {

std::vector<Term> row_terms(const MatrixXd& A, int r, int offset) {
  std::vector<Term> t;
  for (int j = 0; j < A.cols(); ++j)
    if (A(r, j) != 0.0) t.push_back({offset + j, A(r, j)});
  return t;
}

// Snaps an interior-point answer onto the vertex cut out by its nearly active
// rows, when that vertex is feasible and no worse.
void polish_vertex(const MatrixXd& C, const VectorXd& d, const VectorXd& w, double sense,
                   std::vector<double>& xs) {
  const int n = static_cast<int>(C.cols());
  Eigen::Map<VectorXd> x(xs.data(), n);
  const VectorXd slack = d - C * x;
  std::vector<int> active;
  for (int r = 0; r < C.rows(); ++r)
    if (slack(r) <= 1e-6 * (1.0 + std::abs(d(r)))) active.push_back(r);
  if (active.empty()) return;
  MatrixXd A(active.size(), n);
  VectorXd b(active.size());
  for (std::size_t k = 0; k < active.size(); ++k) {
    A.row(k) = C.row(active[k]);
    b(k) = d(active[k]);
  }
  // Smallest move onto the active face; a vertex when the face is a point.
  const VectorXd v = x + Eigen::CompleteOrthogonalDecomposition<MatrixXd>(A).solve(VectorXd(b - A * x));
  if (((A * v - b).array().abs() > 1e-9 * (1.0 + b.cwiseAbs().maxCoeff())).any()) return;
  if (((C * v - d).array() > kFeasTol).any()) return;
  if (sense * w.dot(v) > sense * w.dot(x) + 1e-7 * (1.0 + std::abs(w.dot(x)))) return;
  x = v;
}

// min (sense = 1) or max (sense = -1) of w'x over {C x <= d}.
SolveResult linear_over_polytope(const MatrixXd& C, const VectorXd& d, const VectorXd& w,
                                 double sense) {
  ConicProgram p;
  const int x = p.add_variables(static_cast<int>(C.cols()));
  for (int r = 0; r < C.rows(); ++r) p.add_less_equal(row_terms(C, r, x), d(r));
  for (int j = 0; j < w.size(); ++j) p.set_objective(x + j, sense * w(j));
  SolveResult res = solve(p);
  if (res.optimal() || res.status == SolveStatus::kInaccurate)
    polish_vertex(C, d, w, sense, res.x);
  return res;
}

SolveResult linear_over_decision_set(const DecisionSet& Z, int n, const VectorXd& w,
                                     double sense) {
  ConicProgram p;
  const int z = p.add_variables(n);
  for (int r = 0; r < Z.A_ineq.rows(); ++r) p.add_less_equal(row_terms(Z.A_ineq, r, z), Z.b_ineq(r));
  for (int r = 0; r < Z.A_eq.rows(); ++r) p.add_equal(row_terms(Z.A_eq, r, z), Z.b_eq(r));
  for (int j = 0; j < n; ++j) p.set_objective(z + j, sense * w(j));
  return solve(p);
}

struct Box {
  VectorXd lo, hi;
};

Box bounding_box(const SupportPolytope& S) {
  const int n = S.dim();
  Box b{VectorXd(n), VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    VectorXd e = VectorXd::Unit(n, i);
    for (double sense : {1.0, -1.0}) {
      const SolveResult r = linear_over_polytope(S.C, S.d, e, sense);
      if (r.status == SolveStatus::kUnbounded)
        throw InstanceError("support unbounded along coordinate " + std::to_string(i));
      if (r.status == SolveStatus::kInfeasible) throw InstanceError("support is empty");
      if (!r.optimal() && r.status != SolveStatus::kInaccurate)
        throw SolverError("bounding box LP failed: " + to_string(r.status));
      (sense > 0 ? b.lo : b.hi)(i) = r.x[i];
    }
  }
  return b;
}

}  // namespace

ValidationReport validate_instance(const SsdInstance& inst) {
  check_dimensions(inst);
  ValidationReport rep;
  const int n = inst.dim();
  for (int i = 0; i < inst.ball.size(); ++i)
    if (!inst.support.contains(inst.ball.samples.row(i).transpose()))
      rep.violations.push_back("sample " + std::to_string(i) + " lies outside the support");
  if (!inst.decision_set.contains(inst.benchmark))
    rep.violations.push_back("benchmark is not in the decision set");
  for (int i = 0; i < n; ++i) {
    const VectorXd e = VectorXd::Unit(n, i);
    for (double sense : {1.0, -1.0}) {
      const SolveResult r = linear_over_decision_set(inst.decision_set, n, e, sense);
      if (r.status == SolveStatus::kUnbounded) {
        rep.violations.push_back("decision set unbounded along coordinate " + std::to_string(i));
        break;
      }
      if (r.status == SolveStatus::kInfeasible) {
        rep.violations.push_back("decision set is empty");
        return rep;
      }
    }
  }
  for (double sense : {1.0, -1.0}) {
    const SolveResult r = linear_over_polytope(inst.support.C, inst.support.d, inst.benchmark, sense);
    if (r.status == SolveStatus::kUnbounded) {
      rep.violations.push_back("support unbounded along benchmark");
      break;
    }
    if (r.status == SolveStatus::kInfeasible) {
      rep.violations.push_back("support is empty");
      break;
    }
  }
  return rep;
}

EtaRange eta_range(const SsdInstance& inst) {
  check_dimensions(inst);
  EtaRange out;
  for (double sense : {1.0, -1.0}) {
    const SolveResult r = linear_over_polytope(inst.support.C, inst.support.d, inst.benchmark, sense);
    if (r.status == SolveStatus::kUnbounded)
      throw InstanceError("support unbounded along benchmark");
    if (r.status == SolveStatus::kInfeasible) throw InstanceError("support is empty");
    if (!r.optimal() && r.status != SolveStatus::kInaccurate)
      throw SolverError("range LP failed: " + to_string(r.status));
    Eigen::Map<const VectorXd> x(r.x.data(), inst.dim());
    (sense > 0 ? out.r_min : out.r_max) = inst.benchmark.dot(x);
  }
  // The range must cover every observed sample.
  for (int i = 0; i < inst.ball.size(); ++i) {
    const double v = inst.benchmark.dot(inst.ball.samples.row(i));
    out.r_min = std::min(out.r_min, v);
    out.r_max = std::max(out.r_max, v);
  }
  return out;
}

MatrixXd unique_rows(const MatrixXd& pts, double tol) {
  std::vector<int> keep;
  for (int i = 0; i < pts.rows(); ++i) {
    bool dup = false;
    for (int k : keep)
      if ((pts.row(i) - pts.row(k)).cwiseAbs().maxCoeff() <= tol) {
        dup = true;
        break;
      }
    if (!dup) keep.push_back(i);
  }
  MatrixXd out(keep.size(), pts.cols());
  for (std::size_t r = 0; r < keep.size(); ++r) out.row(r) = pts.row(keep[r]);
  return out;
}

VectorXd unique_sorted(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  return Eigen::Map<VectorXd>(out.data(), out.size());
}

MatrixXd pairwise_distances(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd D(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.rows(); ++j) D(i, j) = (a.row(i) - b.row(j)).norm();
  return D;
}

namespace {

// Appends the observed samples to `pts`, deduplicates, and records where each
// sample ended up.
SampleGrids finish_grids(const SsdInstance& inst, const std::vector<VectorXd>& pts,
                         std::vector<double> levels) {
  const int n = inst.dim();
  const int N = inst.ball.size();
  MatrixXd all(pts.size() + N, n);
  for (std::size_t r = 0; r < pts.size(); ++r) all.row(r) = pts[r].transpose();
  for (int i = 0; i < N; ++i) all.row(pts.size() + i) = inst.ball.samples.row(i);

  SampleGrids g;
  g.xi = unique_rows(all);
  g.sample_rows.resize(N);
  for (int i = 0; i < N; ++i) {
    int best = -1;
    for (int r = 0; r < g.xi.rows(); ++r)
      if ((g.xi.row(r) - inst.ball.samples.row(i)).cwiseAbs().maxCoeff() <= kDedupTol) {
        best = r;
        break;
      }
    g.sample_rows[i] = best;
  }
  for (int i = 0; i < N; ++i) levels.push_back(inst.benchmark.dot(inst.ball.samples.row(i)));
  g.eta = unique_sorted(std::move(levels));
  return g;
}

}  // namespace

SampleGrids generate_grids(const SsdInstance& inst, GridMode mode, int n_xi, int n_eta,
                           std::uint64_t seed) {
  check_dimensions(inst);
  const int n = inst.dim();
  const int N = inst.ball.size();
  if (n_xi < N)
    throw InstanceError("support grid size " + std::to_string(n_xi) +
                        " is smaller than the sample count " + std::to_string(N));
  if (n_eta < 1) throw InstanceError("level grid size must be positive");

  const EtaRange range = eta_range(inst);
  const Box box = bounding_box(inst.support);

  std::vector<VectorXd> pts;
  if (mode == GridMode::kGrid) {
    int per_axis = static_cast<int>(std::floor(std::pow(double(n_xi), 1.0 / n) + 1e-9));
    per_axis = std::max(per_axis, 1);
    long long total = 1;
    for (int i = 0; i < n; ++i) total *= per_axis;
    std::vector<int> idx(n, 0);
    for (long long c = 0; c < total; ++c) {
      VectorXd p(n);
      for (int i = 0; i < n; ++i) {
        p(i) = per_axis == 1 ? 0.5 * (box.lo(i) + box.hi(i))
                             : box.lo(i) + (box.hi(i) - box.lo(i)) * idx[i] / (per_axis - 1);
      }
      if (inst.support.contains(p)) pts.push_back(p);
      for (int i = 0; i < n; ++i) {
        if (++idx[i] < per_axis) break;
        idx[i] = 0;
      }
    }
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int want = n_xi - N;
    long long attempts = 0;
    while (static_cast<int>(pts.size()) < want) {
      if (++attempts > 1000000)
        throw InstanceError("support too thin for rejection sampling");
      VectorXd p(n);
      for (int i = 0; i < n; ++i) p(i) = box.lo(i) + (box.hi(i) - box.lo(i)) * unit(rng);
      if (inst.support.contains(p)) pts.push_back(p);
    }
  }

  std::vector<double> levels;
  for (int k = 0; k < n_eta; ++k) {
    levels.push_back(n_eta == 1 ? 0.5 * (range.r_min + range.r_max)
                                : range.r_min + range.width() * k / (n_eta - 1));
  }
  return finish_grids(inst, pts, std::move(levels));
}

SampleGrids empirical_grids(const SsdInstance& inst) {
  check_dimensions(inst);
  return finish_grids(inst, {}, {});
}

DecisionVars add_decision_block(ConicProgram& p, const SsdInstance& inst, bool with_objective) {
  const int n = inst.dim();
  DecisionVars v;
  v.z = p.add_variables(n);
  const auto& Z = inst.decision_set;
  for (int r = 0; r < Z.A_ineq.rows(); ++r) p.add_less_equal(row_terms(Z.A_ineq, r, v.z), Z.b_ineq(r));
  for (int r = 0; r < Z.A_eq.rows(); ++r) p.add_equal(row_terms(Z.A_eq, r, v.z), Z.b_eq(r));
  if (!with_objective) return v;
  for (int j = 0; j < inst.objective.linear.size(); ++j)
    p.add_objective(v.z + j, inst.objective.linear(j));
  if (inst.objective.norm_weight != 0.0) {
    if (inst.objective.norm_weight < 0.0)
      throw InstanceError("norm weight must be nonnegative");
    v.epigraph = p.add_variable(0.0);
    SocConstraint cone;
    cone.bound.add(v.epigraph, 1.0);
    for (int j = 0; j < n; ++j) {
      AffineExpr e;
      e.add(v.z + j, 1.0);
      cone.components.push_back(e);
    }
    p.add_soc(std::move(cone));
    p.add_objective(v.epigraph, inst.objective.norm_weight);
  }
  return v;
}

void fix_decision(ConicProgram& p, const DecisionVars& v, const VectorXd& value) {
  for (int j = 0; j < value.size(); ++j) p.add_equal({{v.z + j, 1.0}}, value(j));
}

}  // namespace drssd
