#include "drssd/lower_bound.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <limits>

#include "drssd/ambiguity.hpp"
#include "drssd/conic_solver.hpp"
#include "drssd/error.hpp"

namespace drssd {

std::string to_string(BoundType type) {
  switch (type) {
    case BoundType::kLower: return "lower";
    case BoundType::kUpper: return "upper";
    case BoundType::kClassic: return "classic";
  }
  return "unknown";
}

long long LowerLpLayout::num_rows() const {
  const long long M = num_levels();
  const long long S = num_points();
  return M + num_samples * S * M + S * M;
}

long long LowerLpLayout::num_block_variables(int n) const {
  const long long M = num_levels();
  return n + M + static_cast<long long>(num_samples) * M + num_points() * M;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_grids(const SsdInstance& inst, const SampleGrids& g) {
  if (g.xi.cols() != inst.dim()) throw InstanceError("grid points have the wrong dimension");
  if (static_cast<int>(g.sample_rows.size()) != inst.ball.size())
    throw InstanceError("grids do not record the sample positions");
  for (int r : g.sample_rows)
    if (r < 0 || r >= g.num_xi()) throw InstanceError("observed sample missing from the grid");
}

void record(BoundReport& rep, const SolveResult& r) {
  rep.last_status = r.status;
  rep.primal_residual = r.primal_residual;
  rep.dual_residual = r.dual_residual;
  rep.gap = r.gap;
  rep.solver_iterations += r.iterations;
}

void require_usable(const SolveResult& r, const char* what) {
  if (!r.optimal() && r.status != SolveStatus::kInaccurate)
    throw SolverError(std::string(what) + ": " + to_string(r.status));
}

VectorXd extract_z(const SolveResult& r, const DecisionVars& v, int n) {
  VectorXd z(n);
  for (int j = 0; j < n; ++j) z(j) = r.x[v.z + j];
  return z;
}

}  // namespace

LowerProgram build_lower_lp(const SsdInstance& inst, const SampleGrids& grids,
                            const std::vector<int>& xi_index, const std::vector<int>& eta_index) {
  check_dimensions(inst);
  check_grids(inst, grids);
  const int N = inst.ball.size();
  const double eps = inst.ball.radius;

  LowerProgram out;
  ConicProgram& p = out.program;
  LowerLpLayout& L = out.layout;
  L.num_samples = N;
  L.xi_index = xi_index;
  L.eta_index = eta_index;
  L.decision = add_decision_block(p, inst);
  const int M = L.num_levels();
  const int S = L.num_points();
  L.lambda = p.add_variables(M, 0.0);
  L.beta = p.add_variables(N * M);
  L.s = p.add_variables(S * M, 0.0);

  for (int kk = 0; kk < M; ++kk) {
    std::vector<Term> row{{L.lambda_var(kk), eps}};
    for (int i = 0; i < N; ++i) row.push_back({L.beta_var(i, kk), -1.0 / N});
    p.add_less_equal(std::move(row), 0.0);
  }
  for (int i = 0; i < N; ++i) {
    for (int jj = 0; jj < S; ++jj) {
      const int j = xi_index[jj];
      const double c = (grids.xi.row(j) - inst.ball.samples.row(i)).norm();
      const double bench = inst.benchmark.dot(grids.xi.row(j));
      for (int kk = 0; kk < M; ++kk) {
        const double eta = grids.eta(eta_index[kk]);
        std::vector<Term> row{{L.beta_var(i, kk), 1.0}, {L.s_var(jj, kk), 1.0}};
        if (c != 0.0) row.push_back({L.lambda_var(kk), -c});
        p.add_less_equal(std::move(row), std::max(eta - bench, 0.0));
      }
    }
  }
  for (int jj = 0; jj < S; ++jj) {
    const int j = xi_index[jj];
    for (int kk = 0; kk < M; ++kk) {
      std::vector<Term> row{{L.s_var(jj, kk), 1.0}};
      for (int q = 0; q < inst.dim(); ++q)
        if (grids.xi(j, q) != 0.0) row.push_back({L.decision.z + q, grids.xi(j, q)});
      p.add_greater_equal(std::move(row), grids.eta(eta_index[kk]));
    }
  }
  return out;
}

LowerProgram build_lower_lp(const SsdInstance& inst, const SampleGrids& grids) {
  std::vector<int> all_xi(grids.num_xi());
  std::vector<int> all_eta(grids.num_eta());
  std::iota(all_xi.begin(), all_xi.end(), 0);
  std::iota(all_eta.begin(), all_eta.end(), 0);
  return build_lower_lp(inst, grids, all_xi, all_eta);
}

BoundReport solve_lower(const SsdInstance& inst, const SampleGrids& grids,
                        const SolverSettings& settings) {
  const auto t0 = Clock::now();
  const LowerProgram lp = build_lower_lp(inst, grids);
  const SolveResult r = solve(lp.program, settings);
  require_usable(r, "lower-bound LP");
  BoundReport rep;
  rep.type = BoundType::kLower;
  record(rep, r);
  const VectorXd z = extract_z(r, lp.layout.decision, inst.dim());
  rep.solution.assign(z.data(), z.data() + z.size());
  rep.value = r.primal_objective;
  rep.trace.push_back(rep.value);
  rep.iterations = 1;
  rep.converged = r.optimal();
  if (!rep.converged) rep.note = "solver inaccurate";
  rep.seconds = seconds_since(t0);
  return rep;
}

CuttingPlaneResult cutting_plane(const SsdInstance& inst, const SampleGrids& grids,
                                 const CuttingPlaneOptions& opt, const CutSets& start) {
  if (opt.max_iter < 1) throw ConfigError("cutting plane needs max_iter >= 1");
  if (opt.batch < 1) throw ConfigError("cut batch size must be positive");
  check_dimensions(inst);
  check_grids(inst, grids);
  const auto t0 = Clock::now();
  const int n = inst.dim();
  const int N = inst.ball.size();
  const int S = grids.num_xi();
  const int M = grids.num_eta();
  const MatrixXd dist = pairwise_distances(inst.ball.samples, grids.xi);
  const VectorXd bench = grids.xi * inst.benchmark;

  CuttingPlaneResult out;
  out.cuts = start;
  std::vector<char> in_j1(S, 0), in_j2(M, 0);
  for (int j : out.cuts.J1) {
    if (j < 0 || j >= S) throw ConfigError("warm-start support index out of range");
    in_j1[j] = 1;
  }
  for (int k : out.cuts.J2) {
    if (k < 0 || k >= M) throw ConfigError("warm-start level index out of range");
    in_j2[k] = 1;
  }

  BoundReport& rep = out.report;
  rep.type = BoundType::kLower;
  rep.note = "not converged";
  MatrixXd beta(N, M);
  VectorXd lambda(M);
  for (int it = 0; it < opt.max_iter; ++it) {
    const LowerProgram lp = build_lower_lp(inst, grids, out.cuts.J1, out.cuts.J2);
    const SolveResult r = solve(lp.program, opt.solver);
    require_usable(r, "relaxed lower-bound LP");
    record(rep, r);
    ++rep.iterations;

    // Levels without a block take the feasible choice lambda = beta = 0.
    const LowerLpLayout& L = lp.layout;
    lambda.setZero();
    beta.setZero();
    for (int kk = 0; kk < L.num_levels(); ++kk) {
      const int k = L.eta_index[kk];
      lambda(k) = r.x[L.lambda_var(kk)];
      for (int i = 0; i < N; ++i) beta(i, k) = r.x[L.beta_var(i, kk)];
    }
    const VectorXd z = extract_z(r, L.decision, n);
    rep.solution.assign(z.data(), z.data() + n);
    rep.value = r.primal_objective;
    rep.trace.push_back(rep.value);

    const VectorXd u = grids.xi * z;
    // Collect delta over all triples and the best candidates per new pair.
    double delta = -std::numeric_limits<double>::infinity();
    struct Cand {
      double v;
      int i, j, k;
    };
    std::vector<Cand> cands;
    cands.reserve(static_cast<std::size_t>(S) * M);
    for (int j = 0; j < S; ++j) {
      for (int k = 0; k < M; ++k) {
        const double psi = std::max(grids.eta(k) - u(j), 0.0) - std::max(grids.eta(k) - bench(j), 0.0);
        double best = -std::numeric_limits<double>::infinity();
        int best_i = 0;
        for (int i = 0; i < N; ++i) {
          const double v = beta(i, k) - lambda(k) * dist(i, j) + psi;
          if (v > best) {
            best = v;
            best_i = i;
          }
        }
        delta = std::max(delta, best);
        if (!(in_j1[j] && in_j2[k])) cands.push_back({best, best_i, j, k});
      }
    }
    out.cuts.violations.push_back(delta);

    // Pairs already in J1 x J2 are enforced by the LP; what remains of their
    // violation is solver noise, so only new pairs are eligible.
    const int take = std::min<int>(opt.batch, static_cast<int>(cands.size()));
    std::partial_sort(cands.begin(), cands.begin() + take, cands.end(),
                      [](const Cand& a, const Cand& b) {
                        if (a.v != b.v) return a.v > b.v;
                        if (a.i != b.i) return a.i < b.i;
                        if (a.j != b.j) return a.j < b.j;
                        return a.k < b.k;
                      });
    if (delta <= opt.violation_tol || take == 0 || cands[0].v <= opt.violation_tol) {
      rep.converged = true;
      rep.note.clear();
      break;
    }
    for (int q = 0; q < take && cands[q].v > opt.violation_tol; ++q) {
      if (!in_j1[cands[q].j]) {
        in_j1[cands[q].j] = 1;
        out.cuts.J1.push_back(cands[q].j);
      }
      if (!in_j2[cands[q].k]) {
        in_j2[cands[q].k] = 1;
        out.cuts.J2.push_back(cands[q].k);
      }
    }
  }
  rep.seconds = seconds_since(t0);
  return out;
}

double sampled_robust_violation(const SsdInstance& inst, const SampleGrids& grids,
                                const VectorXd& z) {
  check_grids(inst, grids);
  const MatrixXd dist = pairwise_distances(inst.ball.samples, grids.xi);
  const VectorXd u = grids.xi * z;
  const VectorXd v = grids.xi * inst.benchmark;
  double worst = -std::numeric_limits<double>::infinity();
  VectorXd psi(grids.num_xi());
  for (int k = 0; k < grids.num_eta(); ++k) {
    const double eta = grids.eta(k);
    for (int j = 0; j < grids.num_xi(); ++j)
      psi(j) = std::max(eta - u(j), 0.0) - std::max(eta - v(j), 0.0);
    worst = std::max(worst, worst_case_expectation_discrete(psi, dist, inst.ball.radius).value);
  }
  return worst;
}

BoundReport classic_ssd_lp(const SsdInstance& inst, const SolverSettings& settings) {
  check_dimensions(inst);
  const auto t0 = Clock::now();
  const int n = inst.dim();
  const int N = inst.ball.size();
  const MatrixXd& X = inst.ball.samples;
  const VectorXd bench = X * inst.benchmark;
  std::vector<double> lv(bench.data(), bench.data() + N);
  const VectorXd levels = unique_sorted(lv);

  ConicProgram p;
  const DecisionVars dv = add_decision_block(p, inst);
  const int K = static_cast<int>(levels.size());
  const int s = p.add_variables(N * K, 0.0);
  for (int k = 0; k < K; ++k) {
    double rhs = 0.0;
    std::vector<Term> mean;
    for (int i = 0; i < N; ++i) {
      rhs += std::max(levels(k) - bench(i), 0.0) / N;
      mean.push_back({s + i * K + k, 1.0 / N});
      std::vector<Term> row{{s + i * K + k, 1.0}};
      for (int q = 0; q < n; ++q)
        if (X(i, q) != 0.0) row.push_back({dv.z + q, X(i, q)});
      p.add_greater_equal(std::move(row), levels(k));
    }
    p.add_less_equal(std::move(mean), rhs);
  }
  const SolveResult r = solve(p, settings);
  require_usable(r, "classic SSD LP");
  BoundReport rep;
  rep.type = BoundType::kClassic;
  record(rep, r);
  const VectorXd z = extract_z(r, dv, n);
  rep.solution.assign(z.data(), z.data() + n);
  rep.value = r.primal_objective;
  rep.trace.push_back(rep.value);
  rep.iterations = 1;
  rep.converged = r.optimal();
  if (!rep.converged) rep.note = "solver inaccurate";
  rep.seconds = seconds_since(t0);
  return rep;
}

}  // namespace drssd
