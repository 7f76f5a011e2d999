#include "drssd/upper_bound.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "drssd/conic_solver.hpp"
#include "drssd/error.hpp"

namespace drssd {

IntervalSplit split_eta_intervals(const EtaRange& range, int K) {
  if (K <= 0) throw ConfigError("interval count must be positive, got " + std::to_string(K));
  if (!(range.r_min <= range.r_max)) throw InstanceError("level range is inverted");
  IntervalSplit s;
  s.K = K;
  const double w = range.width() / K;
  for (int k = 0; k < K; ++k) {
    s.lower.push_back(range.r_min + k * w);
    s.upper.push_back(k + 1 == K ? range.r_max : range.r_min + (k + 1) * w);
  }
  return s;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Context {
  const SsdInstance& inst;
  int n, l, N;
  std::vector<VectorXd> slack;  // d - C xhat_i
  VectorXd bench;               // z0'xhat_i

  explicit Context(const SsdInstance& s) : inst(s) {
    check_dimensions(s);
    n = s.dim();
    l = s.support.rows();
    N = s.ball.size();
    bench = s.ball.samples * s.benchmark;
    for (int i = 0; i < N; ++i)
      slack.push_back(s.support.d - s.support.C * s.ball.samples.row(i).transpose());
  }
  double xhat(int i, int q) const { return inst.ball.samples(i, q); }
  double C(int r, int q) const { return inst.support.C(r, q); }
};

void push(std::vector<Term>& t, int var, double coef) {
  if (coef != 0.0) t.push_back({var, coef});
}

BlockVars add_multiplier_vars(ConicProgram& p, int l) {
  BlockVars b;
  b.mu = p.add_variables(3, 0.0);
  p.set_bounds(b.mu, 0.0, 1.0);
  b.nu = p.add_variables(l, 0.0);
  b.mut = p.add_variables(3, 0.0);
  p.set_bounds(b.mut, 0.0, 1.0);
  b.nut = p.add_variables(l, 0.0);
  b.V = p.add_variable();
  return b;
}

AffineExpr lambda_expr(int lam, double lam_value) {
  AffineExpr e;
  if (lam >= 0)
    e.add(lam, 1.0);
  else
    e.constant = lam_value;
  return e;
}

// First dual of (i, k) at fixed z: mu (3) and nu (l) variables, V given.
// lambda_k is the variable `lam` or, when lam < 0, the constant `lam_value`.
void add_first_dual(ConicProgram& p, const Context& cx, const VectorXd& z, double lo, double hi,
                    int i, int mu, int nu, int V, int lam, double lam_value) {
  const double a0 = cx.bench(i);
  const double az = cx.inst.ball.samples.row(i).dot(z);
  std::vector<Term> row;
  for (int r = 0; r < cx.l; ++r) push(row, nu + r, cx.slack[i](r));
  push(row, mu + 0, a0 - hi);
  push(row, mu + 1, hi - az);
  push(row, mu + 2, hi - lo);
  row.push_back({V, -1.0});
  p.add_less_equal(std::move(row), az - hi);
  p.add_less_equal({{mu + 0, 1.0}, {mu + 1, -1.0}, {mu + 2, -1.0}}, 1.0);

  SocConstraint cone;
  cone.bound = lambda_expr(lam, lam_value);
  for (int q = 0; q < cx.n; ++q) {
    AffineExpr e;
    e.constant = z(q);
    if (z(q) != 0.0) e.add(mu + 1, z(q));
    if (cx.inst.benchmark(q) != 0.0) e.add(mu + 0, -cx.inst.benchmark(q));
    for (int r = 0; r < cx.l; ++r)
      if (cx.C(r, q) != 0.0) e.add(nu + r, cx.C(r, q));
    cone.components.push_back(std::move(e));
  }
  p.add_soc(std::move(cone));
}

// Second dual of (i, k) at fixed z.
void add_second_dual(ConicProgram& p, const Context& cx, const VectorXd& z, double lo,
                     double hi, int i, int mu, int nu, int V, int lam, double lam_value) {
  const double a0 = cx.bench(i);
  const double az = cx.inst.ball.samples.row(i).dot(z);
  std::vector<Term> row;
  for (int r = 0; r < cx.l; ++r) push(row, nu + r, cx.slack[i](r));
  push(row, mu + 0, a0 - hi);
  push(row, mu + 1, az - hi);
  push(row, mu + 2, hi - lo);
  row.push_back({V, -1.0});
  p.add_less_equal(std::move(row), 0.0);
  p.add_less_equal({{mu + 0, 1.0}, {mu + 1, 1.0}, {mu + 2, -1.0}}, 0.0);

  SocConstraint cone;
  cone.bound = lambda_expr(lam, lam_value);
  for (int q = 0; q < cx.n; ++q) {
    AffineExpr e;
    if (cx.inst.benchmark(q) != 0.0) e.add(mu + 0, -cx.inst.benchmark(q));
    if (z(q) != 0.0) e.add(mu + 1, -z(q));
    for (int r = 0; r < cx.l; ++r)
      if (cx.C(r, q) != 0.0) e.add(nu + r, cx.C(r, q));
    cone.components.push_back(std::move(e));
  }
  p.add_soc(std::move(cone));
}

BlockVars add_block_fixed_z(ConicProgram& p, const Context& cx, const VectorXd& z, double lo,
                            double hi, int i, int lam) {
  const BlockVars b = add_multiplier_vars(p, cx.l);
  add_first_dual(p, cx, z, lo, hi, i, b.mu, b.nu, b.V, lam, 0.0);
  add_second_dual(p, cx, z, lo, hi, i, b.mut, b.nut, b.V, lam, 0.0);
  return b;
}

// Both dual blocks of (i, k) with the multipliers fixed and z variable.
BlockVars add_block_fixed_mu(ConicProgram& p, const Context& cx, int zv, const DualBlock& m,
                             double lo, double hi, int i, int lam) {
  BlockVars b;
  b.nu = p.add_variables(cx.l, 0.0);
  b.nut = p.add_variables(cx.l, 0.0);
  b.V = p.add_variable();
  const double a0 = cx.bench(i);
  const auto& mu = m.mu;
  const auto& mt = m.mut;

  std::vector<Term> r1;
  for (int r = 0; r < cx.l; ++r) push(r1, b.nu + r, cx.slack[i](r));
  for (int q = 0; q < cx.n; ++q) push(r1, zv + q, -(1.0 + mu[1]) * cx.xhat(i, q));
  r1.push_back({b.V, -1.0});
  p.add_less_equal(std::move(r1), -mu[0] * a0 + mu[2] * lo - (1.0 - mu[0] + mu[1] + mu[2]) * hi);

  std::vector<Term> r2;
  for (int r = 0; r < cx.l; ++r) push(r2, b.nut + r, cx.slack[i](r));
  for (int q = 0; q < cx.n; ++q) push(r2, zv + q, mt[1] * cx.xhat(i, q));
  r2.push_back({b.V, -1.0});
  p.add_less_equal(std::move(r2), -mt[0] * a0 + mt[2] * lo - (-mt[0] - mt[1] + mt[2]) * hi);

  SocConstraint c1, c2;
  c1.bound.add(lam, 1.0);
  c2.bound.add(lam, 1.0);
  const VectorXd& z0 = cx.inst.benchmark;
  for (int q = 0; q < cx.n; ++q) {
    AffineExpr e1, e2;
    e1.add(zv + q, 1.0 + mu[1]);
    e1.constant = -mu[0] * z0(q);
    if (mt[1] != 0.0) e2.add(zv + q, -mt[1]);
    e2.constant = -mt[0] * z0(q);
    for (int r = 0; r < cx.l; ++r) {
      if (cx.C(r, q) == 0.0) continue;
      e1.add(b.nu + r, cx.C(r, q));
      e2.add(b.nut + r, cx.C(r, q));
    }
    c1.components.push_back(std::move(e1));
    c2.components.push_back(std::move(e2));
  }
  p.add_soc(std::move(c1));
  p.add_soc(std::move(c2));
  return b;
}

// lambda_k eps + (1/N) sum_i V^ik <= 0 for every used interval.
void add_budget_rows(ConicProgram& p, const MasterLayout& L, int N, double eps) {
  for (int k = 0; k < L.K; ++k) {
    std::vector<Term> row;
    push(row, L.lambda + k, eps);
    for (int i = 0; i < N; ++i) row.push_back({L.blocks[i * L.K + k].V, 1.0 / N});
    p.add_less_equal(std::move(row), 0.0);
  }
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

MasterProgram build_master_fixed_z(const SsdInstance& inst, const IntervalSplit& split,
                                   const VectorXd& z, FixedZObjective objective) {
  const Context cx(inst);
  if (z.size() != cx.n) throw InstanceError("decision vector has the wrong dimension");
  MasterProgram out;
  ConicProgram& p = out.program;
  MasterLayout& L = out.layout;
  L.K = split.effective();
  L.lambda = p.add_variables(L.K, 0.0);
  L.blocks.resize(static_cast<std::size_t>(cx.N) * L.K);
  for (int i = 0; i < cx.N; ++i)
    for (int k = 0; k < L.K; ++k)
      L.blocks[i * L.K + k] =
          add_block_fixed_z(p, cx, z, split.lower[k], split.upper[k], i, L.lambda + k);
  add_budget_rows(p, L, cx.N, inst.ball.radius);
  if (objective == FixedZObjective::kZero) {
    p.set_objective_offset(inst.objective.evaluate(z));
  } else {
    for (int k = 0; k < L.K; ++k) {
      p.add_objective(L.lambda + k, inst.ball.radius);
      for (int i = 0; i < cx.N; ++i) p.add_objective(L.blocks[i * L.K + k].V, 1.0 / cx.N);
    }
  }
  return out;
}

MasterProgram build_master_fixed_multipliers(const SsdInstance& inst, const IntervalSplit& split,
                                             const Multipliers& m) {
  const Context cx(inst);
  MasterProgram out;
  ConicProgram& p = out.program;
  MasterLayout& L = out.layout;
  L.K = split.effective();
  if (m.N != cx.N || m.K != L.K || static_cast<int>(m.blocks.size()) != cx.N * L.K)
    throw InstanceError("multipliers do not match the instance and split");
  for (const auto& b : m.blocks) {
    const bool ok = b.mu[0] <= 1.0 + 1e-9 && b.mut[0] <= 1.0 + 1e-9 &&
                    1.0 - b.mu[0] + b.mu[1] + b.mu[2] >= -1e-9 &&
                    -b.mut[0] - b.mut[1] + b.mut[2] >= -1e-9 &&
                    *std::min_element(b.mu.begin(), b.mu.end()) >= -1e-9 &&
                    *std::min_element(b.mut.begin(), b.mut.end()) >= -1e-9;
    if (!ok) throw InstanceError("fixed multipliers violate their sign constraints");
  }
  L.decision = add_decision_block(p, inst);
  L.lambda = p.add_variables(L.K, 0.0);
  L.blocks.resize(static_cast<std::size_t>(cx.N) * L.K);
  for (int i = 0; i < cx.N; ++i)
    for (int k = 0; k < L.K; ++k)
      L.blocks[i * L.K + k] = add_block_fixed_mu(p, cx, L.decision.z, m.at(i, k), split.lower[k],
                                                 split.upper[k], i, L.lambda + k);
  add_budget_rows(p, L, cx.N, inst.ball.radius);
  return out;
}

Multipliers extract_multipliers(const SsdInstance& inst, const MasterLayout& L,
                                const std::vector<double>& x) {
  const int N = inst.ball.size();
  const int l = inst.support.rows();
  Multipliers m;
  m.N = N;
  m.K = L.K;
  for (int k = 0; k < L.K; ++k) m.lambda.push_back(std::max(0.0, x[L.lambda + k]));
  for (const BlockVars& b : L.blocks) {
    DualBlock d;
    d.nu = VectorXd::Zero(l);
    d.nut = VectorXd::Zero(l);
    // Clip into the sign constraints the solver honours only to tolerance.
    if (b.mu >= 0)
      for (int q = 0; q < 3; ++q) d.mu[q] = std::clamp(x[b.mu + q], 0.0, q == 0 ? 1.0 : ConicProgram::kInf);
    if (b.mut >= 0)
      for (int q = 0; q < 3; ++q) d.mut[q] = std::clamp(x[b.mut + q], 0.0, q == 0 ? 1.0 : ConicProgram::kInf);
    d.mut[2] = std::max(d.mut[2], d.mut[0] + d.mut[1]);
    d.mu[2] = std::max(d.mu[2], d.mu[0] - d.mu[1] - 1.0);
    if (b.nu >= 0)
      for (int r = 0; r < l; ++r) d.nu(r) = std::max(0.0, x[b.nu + r]);
    if (b.nut >= 0)
      for (int r = 0; r < l; ++r) d.nut(r) = std::max(0.0, x[b.nut + r]);
    if (b.V >= 0) d.V = x[b.V];
    m.blocks.push_back(std::move(d));
  }
  return m;
}

ScaResult sca_solve(const SsdInstance& inst, const IntervalSplit& split, const VectorXd& z_start,
                    const ScaOptions& opt) {
  if (opt.max_iter < 1) throw ConfigError("SCA needs max_iter >= 1");
  const auto t0 = Clock::now();
  check_dimensions(inst);
  if (z_start.size() != inst.dim()) throw InstanceError("start vector has the wrong dimension");
  if (!inst.decision_set.contains(z_start, 1e-7))
    throw InstanceError("start point is not in the decision set");

  ScaResult out;
  BoundReport& rep = out.report;
  rep.type = BoundType::kUpper;
  auto record = [&rep](const SolveResult& r) {
    rep.last_status = r.status;
    rep.primal_residual = r.primal_residual;
    rep.dual_residual = r.dual_residual;
    rep.gap = r.gap;
    rep.solver_iterations += r.iterations;
  };
  auto usable = [](const SolveResult& r) {
    return r.optimal() || r.status == SolveStatus::kInaccurate;
  };

  VectorXd z = z_start;
  double fz = inst.objective.evaluate(z);
  out.iterates.push_back(z);
  rep.trace.push_back(fz);

  MasterProgram fixed_z = build_master_fixed_z(inst, split, z, opt.fixed_z_objective);
  SolveResult r = solve(fixed_z.program, opt.solver);
  record(r);
  if (!usable(r)) throw SolverError("start infeasible - increase K or change start");
  Multipliers mult = extract_multipliers(inst, fixed_z.layout, r.x);

  rep.note = "stopped at iteration limit";
  for (int it = 0; it < opt.max_iter; ++it) {
    ++rep.iterations;
    const MasterProgram fixed_mu = build_master_fixed_multipliers(inst, split, mult);
    r = solve(fixed_mu.program, opt.solver);
    record(r);
    // Only a solved master certifies the new z.
    if (!r.optimal()) {
      rep.note = "early stop, still a valid upper bound";
      break;
    }
    VectorXd z_next(inst.dim());
    for (int q = 0; q < inst.dim(); ++q) z_next(q) = r.x[fixed_mu.layout.decision.z + q];
    const double f_next = inst.objective.evaluate(z_next);
    // The current z is feasible for this master, so a worse answer is noise.
    if (!(f_next < fz)) {
      rep.converged = true;
      rep.note.clear();
      break;
    }
    const double step = (z_next - z).lpNorm<Eigen::Infinity>();
    z = z_next;
    fz = f_next;
    out.iterates.push_back(z);
    rep.trace.push_back(fz);
    if (step <= opt.tol) {
      rep.converged = true;
      rep.note.clear();
      break;
    }
    fixed_z = build_master_fixed_z(inst, split, z, opt.fixed_z_objective);
    r = solve(fixed_z.program, opt.solver);
    record(r);
    if (!usable(r)) {
      rep.note = "early stop, still a valid upper bound";
      break;
    }
    mult = extract_multipliers(inst, fixed_z.layout, r.x);
  }
  rep.value = fz;
  rep.solution.assign(z.data(), z.data() + z.size());
  rep.seconds = seconds_since(t0);
  return out;
}

namespace {

void check_pair(const Context& cx, const IntervalSplit& split, int i, int k, double lambda) {
  if (i < 0 || i >= cx.N) throw InstanceError("sample index out of range");
  if (k < 0 || k >= split.K) throw InstanceError("interval index out of range");
  if (!(lambda >= 0.0)) throw InstanceError("lambda must be nonnegative");
}

}  // namespace

SubproblemValues primal_subproblem(const SsdInstance& inst, const IntervalSplit& split,
                                   const VectorXd& z, double lambda, int i, int k,
                                   const SolverSettings& settings) {
  const Context cx(inst);
  check_pair(cx, split, i, k, lambda);
  SubproblemValues out;
  for (int branch = 1; branch <= 2; ++branch) {
    ConicProgram p;
    const int xi = p.add_variables(cx.n);
    const int eta = p.add_variable(split.lower[k], split.upper[k]);
    const int s = p.add_variable(0.0);
    const int m = p.add_variable();
    // max (eta - z'xi) [first branch only] - s - lambda m, as a minimization.
    if (branch == 1) {
      p.add_objective(eta, -1.0);
      for (int q = 0; q < cx.n; ++q) p.add_objective(xi + q, z(q));
    }
    p.add_objective(s, 1.0);
    if (lambda != 0.0) p.add_objective(m, lambda);

    std::vector<Term> sr{{eta, 1.0}, {s, -1.0}};
    for (int q = 0; q < cx.n; ++q) push(sr, xi + q, -inst.benchmark(q));
    p.add_less_equal(std::move(sr), 0.0);
    std::vector<Term> br{{eta, branch == 1 ? -1.0 : 1.0}};
    for (int q = 0; q < cx.n; ++q) push(br, xi + q, branch == 1 ? z(q) : -z(q));
    p.add_less_equal(std::move(br), 0.0);
    for (int r = 0; r < cx.l; ++r) {
      std::vector<Term> row;
      for (int q = 0; q < cx.n; ++q) push(row, xi + q, cx.C(r, q));
      p.add_less_equal(std::move(row), inst.support.d(r));
    }
    SocConstraint cone;
    cone.bound.add(m, 1.0);
    for (int q = 0; q < cx.n; ++q) {
      AffineExpr e;
      e.add(xi + q, 1.0);
      e.constant = -cx.xhat(i, q);
      cone.components.push_back(std::move(e));
    }
    p.add_soc(std::move(cone));

    const SolveResult r = solve(p, settings);
    double v;
    if (r.status == SolveStatus::kInfeasible)
      v = -std::numeric_limits<double>::infinity();
    else if (r.status == SolveStatus::kUnbounded)
      throw SolverError("primal subproblem unbounded for sample " + std::to_string(i) +
                        ", interval " + std::to_string(k));
    else if (r.optimal() || r.status == SolveStatus::kInaccurate)
      v = -r.primal_objective;
    else
      throw SolverError("primal subproblem failed: " + to_string(r.status));
    (branch == 1 ? out.v1 : out.v2) = v;
    (branch == 1 ? out.status1 : out.status2) = r.status;
  }
  out.v = std::max(out.v1, out.v2);
  return out;
}

SubproblemValues dual_subproblem(const SsdInstance& inst, const IntervalSplit& split,
                                 const VectorXd& z, double lambda, int i, int k,
                                 const SolverSettings& settings) {
  const Context cx(inst);
  check_pair(cx, split, i, k, lambda);
  const double lo = split.lower[k];
  const double hi = split.upper[k];
  SubproblemValues out;
  for (int branch = 1; branch <= 2; ++branch) {
    ConicProgram q;
    const int mu = q.add_variables(3, 0.0);
    q.set_bounds(mu, 0.0, 1.0);
    const int nu = q.add_variables(cx.l, 0.0);
    const int V = q.add_variable();
    q.set_objective(V, 1.0);
    if (branch == 1)
      add_first_dual(q, cx, z, lo, hi, i, mu, nu, V, -1, lambda);
    else
      add_second_dual(q, cx, z, lo, hi, i, mu, nu, V, -1, lambda);
    const SolveResult r = solve(q, settings);
    double v;
    if (r.status == SolveStatus::kInfeasible)
      v = std::numeric_limits<double>::infinity();
    else if (r.status == SolveStatus::kUnbounded)
      v = -std::numeric_limits<double>::infinity();
    else if (r.optimal() || r.status == SolveStatus::kInaccurate)
      v = r.primal_objective;
    else
      throw SolverError("dual subproblem failed: " + to_string(r.status));
    (branch == 1 ? out.v1 : out.v2) = v;
    (branch == 1 ? out.status1 : out.status2) = r.status;
  }
  out.v = std::max(out.v1, out.v2);
  return out;
}

StrictFeasibility strict_feasibility(const SsdInstance& inst, const IntervalSplit& split,
                                     const VectorXd& z, int k) {
  const Context cx(inst);
  if (k < 0 || k >= split.K) throw InstanceError("interval index out of range");
  StrictFeasibility out;
  for (int branch = 1; branch <= 2; ++branch) {
    // Rows a'(xi, eta) <= b; maximize r with a'(xi, eta) + r ||a|| <= b.
    std::vector<std::pair<VectorXd, double>> rows;
    for (int r = 0; r < cx.l; ++r) {
      VectorXd a = VectorXd::Zero(cx.n + 1);
      a.head(cx.n) = inst.support.C.row(r).transpose();
      rows.push_back({a, inst.support.d(r)});
    }
    VectorXd up = VectorXd::Zero(cx.n + 1);
    up(cx.n) = 1.0;
    rows.push_back({up, split.upper[k]});
    rows.push_back({-up, -split.lower[k]});
    VectorXd sign = VectorXd::Zero(cx.n + 1);
    sign.head(cx.n) = branch == 1 ? z : VectorXd(-z);
    sign(cx.n) = branch == 1 ? -1.0 : 1.0;
    rows.push_back({sign, 0.0});

    ConicProgram p;
    const int x = p.add_variables(cx.n + 1);
    const int rad = p.add_variable(-ConicProgram::kInf, 1.0);
    p.set_objective(rad, -1.0);
    for (const auto& [a, b] : rows) {
      std::vector<Term> t;
      for (int q = 0; q <= cx.n; ++q) push(t, x + q, a(q));
      push(t, rad, a.norm());
      p.add_less_equal(std::move(t), b);
    }
    const SolveResult r = solve(p);
    double radius = 0.0;
    if (r.optimal() || r.status == SolveStatus::kInaccurate) radius = r.x[rad];
    else if (r.status == SolveStatus::kInfeasible) radius = -ConicProgram::kInf;
    (branch == 1 ? out.radius1 : out.radius2) = radius;
  }
  return out;
}

RobustValue robust_constraint_value(const SsdInstance& inst, const IntervalSplit& split,
                                    const VectorXd& z, const SolverSettings& settings) {
  const Context cx(inst);
  if (z.size() != cx.n) throw InstanceError("decision vector has the wrong dimension");
  RobustValue out;
  out.g = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < split.effective(); ++k) {
    ConicProgram p;
    const int lam = p.add_variable(0.0);
    p.set_objective(lam, inst.ball.radius);
    for (int i = 0; i < cx.N; ++i) {
      const BlockVars b = add_block_fixed_z(p, cx, z, split.lower[k], split.upper[k], i, lam);
      p.set_objective(b.V, 1.0 / cx.N);
    }
    const SolveResult r = solve(p, settings);
    if (!r.optimal() && r.status != SolveStatus::kInaccurate)
      throw SolverError("robust constraint evaluation failed on interval " + std::to_string(k) +
                        ": " + to_string(r.status));
    out.per_interval.push_back(r.primal_objective);
    out.lambda.push_back(r.x[lam]);
    out.g = std::max(out.g, r.primal_objective);
  }
  return out;
}

}  // namespace drssd
