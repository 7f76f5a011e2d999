#include "drssd/conic_solver.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>

#include "drssd/error.hpp"

namespace drssd {

namespace {

using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr double kStaticReg = 1e-10;
constexpr double kMaxReg = 1e-6;
constexpr int kRefineSteps = 6;
constexpr double kStepFraction = 0.99;
constexpr double kMinStep = 1e-10;

// Cone layout of the slack vector: `orthant` nonnegative entries followed by
// second-order cones of the listed sizes.
struct ConeLayout {
  int orthant = 0;
  std::vector<int> soc_dims;
  std::vector<int> soc_offsets;
  int size() const {
    int m = orthant;
    for (int d : soc_dims) m += d;
    return m;
  }
  int degree() const { return orthant + static_cast<int>(soc_dims.size()); }
};

// Standard form: min c'x  s.t.  Ax = b,  Gx + s = h,  s in K.
struct StandardForm {
  int n = 0;
  SpMat A;
  VectorXd b;
  SpMat G;
  VectorXd h;
  VectorXd c;
  ConeLayout cones;
  int num_ineq = 0;               // leading orthant rows from inequalities
  std::vector<int> cone_program_index;  // SOC block -> program cone index
  std::vector<int> degraded_row;        // program cone -> orthant row or -1
};

StandardForm canonicalize(const ConicProgram& p) {
  StandardForm sf;
  sf.n = p.num_variables();
  sf.c = VectorXd::Map(p.objective().data(), sf.n);

  std::vector<Triplet> a_trip;
  const auto& eqs = p.equalities();
  sf.b.resize(static_cast<int>(eqs.size()));
  for (int r = 0; r < static_cast<int>(eqs.size()); ++r) {
    for (const auto& t : eqs[r].terms) a_trip.emplace_back(r, t.var, t.coef);
    sf.b[r] = eqs[r].rhs;
  }
  sf.A.resize(static_cast<int>(eqs.size()), sf.n);
  sf.A.setFromTriplets(a_trip.begin(), a_trip.end());

  std::vector<Triplet> g_trip;
  std::vector<double> h;
  int row = 0;
  for (const auto& r : p.inequalities()) {
    for (const auto& t : r.terms) g_trip.emplace_back(row, t.var, t.coef);
    h.push_back(r.rhs);
    ++row;
  }
  sf.num_ineq = row;
  // Cones with no components are plain linear rows: 0 <= a'x + b.
  sf.degraded_row.assign(p.num_cones(), -1);
  for (int k = 0; k < p.num_cones(); ++k) {
    const auto& cone = p.cones()[k];
    if (!cone.components.empty()) continue;
    for (const auto& t : cone.bound.terms) g_trip.emplace_back(row, t.var, -t.coef);
    h.push_back(cone.bound.constant);
    sf.degraded_row[k] = row;
    ++row;
  }
  const auto& lb = p.lower_bounds();
  const auto& ub = p.upper_bounds();
  for (int j = 0; j < sf.n; ++j) {
    if (std::isfinite(lb[j])) {
      g_trip.emplace_back(row++, j, -1.0);
      h.push_back(-lb[j]);
    }
    if (std::isfinite(ub[j])) {
      g_trip.emplace_back(row++, j, 1.0);
      h.push_back(ub[j]);
    }
  }
  sf.cones.orthant = row;
  for (int k = 0; k < p.num_cones(); ++k) {
    const auto& cone = p.cones()[k];
    if (cone.components.empty()) continue;
    sf.cones.soc_offsets.push_back(row);
    sf.cones.soc_dims.push_back(1 + static_cast<int>(cone.components.size()));
    sf.cone_program_index.push_back(k);
    for (const auto& t : cone.bound.terms) g_trip.emplace_back(row, t.var, -t.coef);
    h.push_back(cone.bound.constant);
    ++row;
    for (const auto& comp : cone.components) {
      for (const auto& t : comp.terms) g_trip.emplace_back(row, t.var, -t.coef);
      h.push_back(comp.constant);
      ++row;
    }
  }
  sf.G.resize(row, sf.n);
  sf.G.setFromTriplets(g_trip.begin(), g_trip.end());
  sf.h = VectorXd::Map(h.data(), row);
  return sf;
}

// ---------------------------------------------------------------------------
// Cone arithmetic.

double soc_residual(const double* x, int dim) {
  // x0 - ||x1||, negative outside the cone.
  double sq = 0.0;
  for (int i = 1; i < dim; ++i) sq += x[i] * x[i];
  return x[0] - std::sqrt(sq);
}

double soc_det(const double* x, int dim) {
  double sq = 0.0;
  for (int i = 1; i < dim; ++i) sq += x[i] * x[i];
  const double nrm = std::sqrt(sq);
  return (x[0] - nrm) * (x[0] + nrm);
}

// Largest violation "depth" of v w.r.t. the cone (max of -min eigenvalue).
double max_infeasibility(const ConeLayout& k, const VectorXd& v) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < k.orthant; ++i) worst = std::max(worst, -v[i]);
  for (std::size_t c = 0; c < k.soc_dims.size(); ++c)
    worst = std::max(worst, -soc_residual(v.data() + k.soc_offsets[c], k.soc_dims[c]));
  return worst;
}

void add_identity(const ConeLayout& k, VectorXd& v, double alpha) {
  for (int i = 0; i < k.orthant; ++i) v[i] += alpha;
  for (int off : k.soc_offsets) v[off] += alpha;
}

VectorXd jordan_product(const ConeLayout& k, const VectorXd& u, const VectorXd& v) {
  VectorXd w(u.size());
  for (int i = 0; i < k.orthant; ++i) w[i] = u[i] * v[i];
  for (std::size_t c = 0; c < k.soc_dims.size(); ++c) {
    const int off = k.soc_offsets[c];
    const int dim = k.soc_dims[c];
    double dot = 0.0;
    for (int i = 0; i < dim; ++i) dot += u[off + i] * v[off + i];
    w[off] = dot;
    for (int i = 1; i < dim; ++i) w[off + i] = u[off] * v[off + i] + v[off] * u[off + i];
  }
  return w;
}

// Solves lambda o u = v for u.
VectorXd jordan_divide(const ConeLayout& k, const VectorXd& lambda, const VectorXd& v) {
  VectorXd u(v.size());
  for (int i = 0; i < k.orthant; ++i) u[i] = v[i] / lambda[i];
  for (std::size_t c = 0; c < k.soc_dims.size(); ++c) {
    const int off = k.soc_offsets[c];
    const int dim = k.soc_dims[c];
    const double l0 = lambda[off];
    double l1v1 = 0.0;
    for (int i = 1; i < dim; ++i) l1v1 += lambda[off + i] * v[off + i];
    const double det = soc_det(lambda.data() + off, dim);
    const double u0 = (l0 * v[off] - l1v1) / det;
    u[off] = u0;
    for (int i = 1; i < dim; ++i) u[off + i] = (v[off + i] - u0 * lambda[off + i]) / l0;
  }
  return u;
}

// Largest alpha with x + alpha*d in the cone (x interior); +inf if unbounded.
double max_step(const ConeLayout& k, const VectorXd& x, const VectorXd& d) {
  double alpha = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k.orthant; ++i)
    if (d[i] < 0.0) alpha = std::min(alpha, -x[i] / d[i]);
  for (std::size_t c = 0; c < k.soc_dims.size(); ++c) {
    const int off = k.soc_offsets[c];
    const int dim = k.soc_dims[c];
    double x1x1 = 0.0, d1d1 = 0.0, x1d1 = 0.0;
    for (int i = 1; i < dim; ++i) {
      x1x1 += x[off + i] * x[off + i];
      d1d1 += d[off + i] * d[off + i];
      x1d1 += x[off + i] * d[off + i];
    }
    const double x0 = x[off], d0 = d[off];
    const double qa = d0 * d0 - d1d1;
    const double qb = 2.0 * (x0 * d0 - x1d1);
    const double qc = soc_det(x.data() + off, dim);
    double root = std::numeric_limits<double>::infinity();
    auto consider = [&](double r) {
      if (r > 0.0 && std::isfinite(r)) root = std::min(root, r);
    };
    if (qa == 0.0) {
      if (qb < 0.0) consider(-qc / qb);
    } else {
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double q = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
        if (q != 0.0) {
          consider(q / qa);
          consider(qc / q);
        }
      }
    }
    // The apex direction: x0 + alpha d0 must stay nonnegative.
    if (d0 < 0.0) root = std::min(root, -x0 / d0);
    alpha = std::min(alpha, root);
  }
  return alpha;
}

// Nesterov-Todd scaling W with W z = W^{-1} s = lambda.
struct NtScaling {
  const ConeLayout* cones = nullptr;
  VectorXd lp_w;                  // sqrt(s / z)
  std::vector<double> eta;        // per cone
  std::vector<VectorXd> wbar;     // per cone, wbar' J wbar = 1

  bool update(const VectorXd& s, const VectorXd& z) {
    const ConeLayout& k = *cones;
    lp_w.resize(k.orthant);
    for (int i = 0; i < k.orthant; ++i) {
      if (!(s[i] > 0.0) || !(z[i] > 0.0)) return false;
      lp_w[i] = std::sqrt(s[i] / z[i]);
    }
    eta.resize(k.soc_dims.size());
    wbar.resize(k.soc_dims.size());
    for (std::size_t c = 0; c < k.soc_dims.size(); ++c) {
      const int off = k.soc_offsets[c];
      const int dim = k.soc_dims[c];
      const double sdet = soc_det(s.data() + off, dim);
      const double zdet = soc_det(z.data() + off, dim);
      if (!(sdet > 0.0) || !(zdet > 0.0) || s[off] <= 0.0 || z[off] <= 0.0) return false;
      const double snorm = std::sqrt(sdet);
      const double znorm = std::sqrt(zdet);
      double dot = 0.0;
      for (int i = 0; i < dim; ++i) dot += (s[off + i] / snorm) * (z[off + i] / znorm);
      const double gamma = std::sqrt(0.5 * (1.0 + dot));
      VectorXd w(dim);
      w[0] = (s[off] / snorm + z[off] / znorm) / (2.0 * gamma);
      for (int i = 1; i < dim; ++i)
        w[i] = (s[off + i] / snorm - z[off + i] / znorm) / (2.0 * gamma);
      eta[c] = std::sqrt(snorm / znorm);
      wbar[c] = std::move(w);
    }
    return true;
  }

  VectorXd apply(const VectorXd& v, bool inverse) const {
    const ConeLayout& k = *cones;
    VectorXd out(v.size());
    for (int i = 0; i < k.orthant; ++i) out[i] = inverse ? v[i] / lp_w[i] : v[i] * lp_w[i];
    for (std::size_t c = 0; c < k.soc_dims.size(); ++c) {
      const int off = k.soc_offsets[c];
      const int dim = k.soc_dims[c];
      const VectorXd& w = wbar[c];
      const double sign = inverse ? -1.0 : 1.0;
      double w1v1 = 0.0;
      for (int i = 1; i < dim; ++i) w1v1 += w[i] * v[off + i];
      const double v0 = v[off];
      const double scale = inverse ? 1.0 / eta[c] : eta[c];
      // inverse: J Wbar J v
      out[off] = scale * (w[0] * v0 + sign * w1v1);
      const double coef = w1v1 / (1.0 + w[0]) + sign * v0;
      for (int i = 1; i < dim; ++i) out[off + i] = scale * (v[off + i] + coef * w[i]);
    }
    return out;
  }

  // W^2 v
  VectorXd apply_squared(const VectorXd& v) const {
    const ConeLayout& k = *cones;
    VectorXd out(v.size());
    for (int i = 0; i < k.orthant; ++i) out[i] = lp_w[i] * lp_w[i] * v[i];
    for (std::size_t c = 0; c < k.soc_dims.size(); ++c) {
      const int off = k.soc_offsets[c];
      const int dim = k.soc_dims[c];
      const VectorXd& w = wbar[c];
      double wv = 0.0;
      for (int i = 0; i < dim; ++i) wv += w[i] * v[off + i];
      const double e2 = eta[c] * eta[c];
      out[off] = e2 * (2.0 * w[0] * wv - v[off]);
      for (int i = 1; i < dim; ++i) out[off + i] = e2 * (2.0 * w[i] * wv + v[off + i]);
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// KKT system  [ 0  A'  G'  ]
//             [ A  0   0   ]
//             [ G  0  -W^2 ]
// factored with static regularization and refined against the exact matrix.

class KktSystem {
 public:
  KktSystem(const StandardForm& sf) : sf_(sf) {
    n_ = sf.n;
    p_ = static_cast<int>(sf.A.rows());
    m_ = static_cast<int>(sf.G.rows());
    for (int col = 0; col < sf.A.outerSize(); ++col)
      for (SpMat::InnerIterator it(sf.A, col); it; ++it)
        static_.emplace_back(n_ + static_cast<int>(it.row()), col, it.value());
    for (int col = 0; col < sf.G.outerSize(); ++col)
      for (SpMat::InnerIterator it(sf.G, col); it; ++it)
        static_.emplace_back(n_ + p_ + static_cast<int>(it.row()), col, it.value());
  }

  /// Retries with heavier regularization when a pivot vanishes; refinement
  /// against the unregularized matrix recovers the accuracy.
  bool factor(const NtScaling& w) {
    scaling_ = &w;
    for (double reg = kStaticReg; reg <= kMaxReg; reg *= 100.0)
      if (factor_with(w, reg)) return true;
    return false;
  }

  VectorXd solve(const VectorXd& rhs) const {
    VectorXd sol = ldlt_.solve(rhs);
    VectorXd res = rhs - multiply(sol);
    double last = res.lpNorm<Eigen::Infinity>();
    const double target = 1e-12 * (1.0 + rhs.lpNorm<Eigen::Infinity>());
    for (int it = 0; it < kRefineSteps && last > target; ++it) {
      VectorXd corr = ldlt_.solve(res);
      VectorXd cand = sol + corr;
      VectorXd cand_res = rhs - multiply(cand);
      const double nrm = cand_res.lpNorm<Eigen::Infinity>();
      if (!(nrm < last)) break;
      sol = std::move(cand);
      res = std::move(cand_res);
      last = nrm;
    }
    return sol;
  }

 private:
  bool factor_with(const NtScaling& w, double reg) {
    std::vector<Triplet> trip = static_;
    for (int j = 0; j < n_; ++j) trip.emplace_back(j, j, reg);
    for (int r = 0; r < p_; ++r) trip.emplace_back(n_ + r, n_ + r, -reg);
    const ConeLayout& k = sf_.cones;
    const int zo = n_ + p_;
    for (int i = 0; i < k.orthant; ++i)
      trip.emplace_back(zo + i, zo + i, -w.lp_w[i] * w.lp_w[i] - reg);
    for (std::size_t c = 0; c < k.soc_dims.size(); ++c) {
      const int off = k.soc_offsets[c];
      const int dim = k.soc_dims[c];
      const VectorXd& wb = w.wbar[c];
      const double e2 = w.eta[c] * w.eta[c];
      for (int i = 0; i < dim; ++i) {
        for (int j = 0; j <= i; ++j) {
          double v = 2.0 * wb[i] * wb[j];
          if (i == j) v += (i == 0 ? -1.0 : 1.0);
          v = -e2 * v;
          if (i == j) v -= reg;
          trip.emplace_back(zo + off + i, zo + off + j, v);
        }
      }
    }
    const int dim = n_ + p_ + m_;
    mat_.resize(dim, dim);
    mat_.setFromTriplets(trip.begin(), trip.end());
    if (!analyzed_) {
      ldlt_.analyzePattern(mat_);
      analyzed_ = true;
    }
    ldlt_.factorize(mat_);
    return ldlt_.info() == Eigen::Success;
  }

  VectorXd multiply(const VectorXd& v) const {
    VectorXd out(v.size());
    const auto vx = v.head(n_);
    const auto vy = v.segment(n_, p_);
    const VectorXd vz = v.tail(m_);
    out.head(n_) = sf_.A.transpose() * vy + sf_.G.transpose() * vz;
    out.segment(n_, p_) = sf_.A * vx;
    out.tail(m_) = sf_.G * vx - scaling_->apply_squared(vz);
    return out;
  }

  const StandardForm& sf_;
  int n_ = 0, p_ = 0, m_ = 0;
  std::vector<Triplet> static_;
  SpMat mat_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  bool analyzed_ = false;
  const NtScaling* scaling_ = nullptr;
};

// ---------------------------------------------------------------------------
// Ruiz equilibration of [A; G] with uniform row scaling inside each cone.

struct Equilibration {
  VectorXd col;  // D
  VectorXd row_a;
  VectorXd row_g;
};

Equilibration equilibrate(StandardForm& sf, int sweeps) {
  Equilibration eq;
  const int n = sf.n;
  const int p = static_cast<int>(sf.A.rows());
  const int m = static_cast<int>(sf.G.rows());
  eq.col = VectorXd::Ones(n);
  eq.row_a = VectorXd::Ones(p);
  eq.row_g = VectorXd::Ones(m);
  auto safe = [](double v) { return v > 1e-300 ? 1.0 / std::sqrt(v) : 1.0; };
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    VectorXd cmax = VectorXd::Zero(n);
    VectorXd ra = VectorXd::Zero(p);
    VectorXd rg = VectorXd::Zero(m);
    for (int j = 0; j < n; ++j) {
      for (SpMat::InnerIterator it(sf.A, j); it; ++it) {
        const double a = std::abs(it.value());
        cmax[j] = std::max(cmax[j], a);
        ra[it.row()] = std::max(ra[it.row()], a);
      }
      for (SpMat::InnerIterator it(sf.G, j); it; ++it) {
        const double a = std::abs(it.value());
        cmax[j] = std::max(cmax[j], a);
        rg[it.row()] = std::max(rg[it.row()], a);
      }
    }
    const ConeLayout& k = sf.cones;
    for (std::size_t c = 0; c < k.soc_dims.size(); ++c) {
      const int off = k.soc_offsets[c];
      const double mx = rg.segment(off, k.soc_dims[c]).maxCoeff();
      rg.segment(off, k.soc_dims[c]).setConstant(mx);
    }
    VectorXd dc(n), da(p), dg(m);
    for (int j = 0; j < n; ++j) dc[j] = safe(cmax[j]);
    for (int i = 0; i < p; ++i) da[i] = safe(ra[i]);
    for (int i = 0; i < m; ++i) dg[i] = safe(rg[i]);
    sf.A = da.asDiagonal() * sf.A * dc.asDiagonal();
    sf.G = dg.asDiagonal() * sf.G * dc.asDiagonal();
    eq.col.array() *= dc.array();
    eq.row_a.array() *= da.array();
    eq.row_g.array() *= dg.array();
  }
  sf.b = eq.row_a.asDiagonal() * sf.b;
  sf.h = eq.row_g.asDiagonal() * sf.h;
  sf.c = eq.col.asDiagonal() * sf.c;
  return eq;
}

// ---------------------------------------------------------------------------

struct Iterate {
  VectorXd x, y, z, s;
  double tau = 1.0, kappa = 1.0;
};

struct Assessment {
  double pres = 0, dres = 0, pobj = 0, dobj = 0, gap = 0;
  bool infeasible_cert = false;
  bool unbounded_cert = false;
  VectorXd x, y, z, s;  // unscaled, divided by tau
};

class InteriorPoint {
 public:
  InteriorPoint(const ConicProgram& program, const SolverSettings& settings)
      : program_(program), settings_(settings), sf_(canonicalize(program)),
        orig_(sf_) {
    eq_ = equilibrate(sf_, settings.equilibration_sweeps);
    n_ = sf_.n;
    p_ = static_cast<int>(sf_.A.rows());
    m_ = static_cast<int>(sf_.G.rows());
    nt_.cones = &sf_.cones;
    bnorm_ = std::max(orig_.b.size() ? orig_.b.lpNorm<Eigen::Infinity>() : 0.0,
                      orig_.h.size() ? orig_.h.lpNorm<Eigen::Infinity>() : 0.0);
    cnorm_ = orig_.c.size() ? orig_.c.lpNorm<Eigen::Infinity>() : 0.0;
  }

  SolveResult run() {
    SolveResult result;
    KktSystem kkt(sf_);
    const ConeLayout& k = sf_.cones;
    const int nu = k.degree();

    Iterate it;
    if (!initialize(kkt, it)) return finish(it, SolveStatus::kInaccurate, 0);

    Iterate best = it;
    double best_merit = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < settings_.max_iter; ++iter) {
      const Assessment a = assess(it);
      const double merit = std::max({a.pres, a.dres, a.gap});
      if (merit < best_merit) {
        best_merit = merit;
        best = it;
      }
      if (settings_.verbose)
        std::fprintf(stderr, "%3d pobj=% .9e dobj=% .9e pres=%.2e dres=%.2e gap=%.2e tau=%.2e kap=%.2e\n",
                     iter, a.pobj, a.dobj, a.pres, a.dres, a.gap, it.tau, it.kappa);
      if (a.pres <= settings_.feas_tol && a.dres <= settings_.feas_tol &&
          a.gap <= settings_.gap_tol)
        return finish(it, SolveStatus::kOptimal, iter);
      if (a.infeasible_cert) return finish(it, SolveStatus::kInfeasible, iter);
      if (a.unbounded_cert) return finish(it, SolveStatus::kUnbounded, iter);

      if (!nt_.update(it.s, it.z) || !kkt.factor(nt_)) {
        if (settings_.verbose) std::fprintf(stderr, "scaling or factorization failed\n");
        return finish(best, SolveStatus::kInaccurate, iter);
      }

      // Residuals of the embedding.
      const VectorXd rx = sf_.A.transpose() * it.y + sf_.G.transpose() * it.z + sf_.c * it.tau;
      const VectorXd ry = sf_.b * it.tau - sf_.A * it.x;
      const VectorXd rz = sf_.h * it.tau - sf_.G * it.x - it.s;
      const double rt = -sf_.c.dot(it.x) - sf_.b.dot(it.y) - sf_.h.dot(it.z) - it.kappa;
      const double mu = (it.s.dot(it.z) + it.tau * it.kappa) / (nu + 1);

      const VectorXd lambda = nt_.apply(it.z, false);

      VectorXd rhs1(n_ + p_ + m_);
      rhs1 << -sf_.c, sf_.b, sf_.h;
      const VectorXd u1 = kkt.solve(rhs1);
      const double a_u1 = sf_.c.dot(u1.head(n_)) + sf_.b.dot(u1.segment(n_, p_)) +
                          sf_.h.dot(u1.tail(m_));

      auto direction = [&](double sigma, const VectorXd& ds_target, double dk_target,
                           VectorXd& dx, VectorXd& dy, VectorXd& dz, VectorXd& ds,
                           double& dtau, double& dkappa) {
        const double f = 1.0 - sigma;
        const VectorXd lam_div = jordan_divide(k, lambda, ds_target);
        VectorXd rhs2(n_ + p_ + m_);
        rhs2 << -f * rx, f * ry, f * rz + nt_.apply(lam_div, false);
        const VectorXd u2 = kkt.solve(rhs2);
        const double a_u2 = sf_.c.dot(u2.head(n_)) + sf_.b.dot(u2.segment(n_, p_)) +
                            sf_.h.dot(u2.tail(m_));
        dtau = (a_u2 - dk_target / it.tau - f * rt) / (it.kappa / it.tau - a_u1);
        dx = u2.head(n_) + dtau * u1.head(n_);
        dy = u2.segment(n_, p_) + dtau * u1.segment(n_, p_);
        dz = u2.tail(m_) + dtau * u1.tail(m_);
        ds = -nt_.apply(VectorXd(lam_div + nt_.apply(dz, false)), false);
        dkappa = -(dk_target + it.kappa * dtau) / it.tau;
      };

      auto step_length = [&](const VectorXd& ds, const VectorXd& dz, double dtau, double dkappa) {
        double alpha = std::min(max_step(k, it.s, ds), max_step(k, it.z, dz));
        if (dtau < 0.0) alpha = std::min(alpha, -it.tau / dtau);
        if (dkappa < 0.0) alpha = std::min(alpha, -it.kappa / dkappa);
        return alpha;
      };

      // Predictor.
      VectorXd dx, dy, dz, ds;
      double dtau = 0, dkappa = 0;
      const VectorXd lam_sq = jordan_product(k, lambda, lambda);
      direction(0.0, lam_sq, it.kappa * it.tau, dx, dy, dz, ds, dtau, dkappa);
      const double alpha_aff = std::min(1.0, step_length(ds, dz, dtau, dkappa));
      double sigma = std::pow(1.0 - alpha_aff, 3);
      sigma = std::clamp(sigma, 0.0, 1.0);

      // Corrector.
      const VectorXd ds_scaled = nt_.apply(ds, true);
      const VectorXd dz_scaled = nt_.apply(dz, false);
      VectorXd target = lam_sq + jordan_product(k, ds_scaled, dz_scaled);
      for (int i = 0; i < k.orthant; ++i) target[i] -= sigma * mu;
      for (int off : k.soc_offsets) target[off] -= sigma * mu;
      const double dk_target = it.kappa * it.tau + dkappa * dtau - sigma * mu;
      direction(sigma, target, dk_target, dx, dy, dz, ds, dtau, dkappa);

      double alpha = step_length(ds, dz, dtau, dkappa);
      alpha = std::min(1.0, kStepFraction * alpha);
      if (!(alpha > kMinStep) || !dx.allFinite() || !dz.allFinite() || !std::isfinite(dtau)) {
        if (settings_.verbose) std::fprintf(stderr, "step length %.2e, stopping\n", alpha);
        return finish(best, SolveStatus::kInaccurate, iter);
      }

      it.x += alpha * dx;
      it.y += alpha * dy;
      it.z += alpha * dz;
      it.s += alpha * ds;
      it.tau += alpha * dtau;
      it.kappa += alpha * dkappa;
    }
    const Assessment a = assess(it);
    if (std::max({a.pres, a.dres, a.gap}) > best_merit) it = best;
    return finish(it, SolveStatus::kIterationLimit, settings_.max_iter);
  }

 private:
  bool initialize(KktSystem& kkt, Iterate& it) {
    const ConeLayout& k = sf_.cones;
    NtScaling identity;
    identity.cones = &k;
    identity.lp_w = VectorXd::Ones(k.orthant);
    for (int d : k.soc_dims) {
      VectorXd w = VectorXd::Zero(d);
      w[0] = 1.0;
      identity.wbar.push_back(w);
      identity.eta.push_back(1.0);
    }
    if (!kkt.factor(identity)) return false;
    nt_ = identity;
    nt_.cones = &k;

    VectorXd rhs(n_ + p_ + m_);
    rhs << VectorXd::Zero(n_), sf_.b, sf_.h;
    VectorXd sol = kkt.solve(rhs);
    it.x = sol.head(n_);
    it.s = -sol.tail(m_);
    if (m_ > 0) {
      const double alpha = max_infeasibility(k, it.s);
      if (alpha >= 0.0) add_identity(k, it.s, 1.0 + alpha);
    }

    rhs << -sf_.c, VectorXd::Zero(p_), VectorXd::Zero(m_);
    sol = kkt.solve(rhs);
    it.y = sol.segment(n_, p_);
    it.z = sol.tail(m_);
    if (m_ > 0) {
      const double alpha = max_infeasibility(k, it.z);
      if (alpha >= 0.0) add_identity(k, it.z, 1.0 + alpha);
    }
    it.tau = 1.0;
    it.kappa = 1.0;
    return it.x.allFinite() && it.s.allFinite() && it.y.allFinite() && it.z.allFinite();
  }

  Assessment assess(const Iterate& it) const {
    Assessment a;
    const VectorXd x = eq_.col.cwiseProduct(it.x);
    const VectorXd y = eq_.row_a.cwiseProduct(it.y);
    const VectorXd z = eq_.row_g.cwiseProduct(it.z);
    const VectorXd s = it.s.cwiseQuotient(eq_.row_g);

    const double inv_tau = 1.0 / it.tau;
    a.x = x * inv_tau;
    a.y = y * inv_tau;
    a.z = z * inv_tau;
    a.s = s * inv_tau;
    double pres = 0.0;
    if (p_) pres = (orig_.A * a.x - orig_.b).lpNorm<Eigen::Infinity>();
    if (m_) pres = std::max(pres, (orig_.G * a.x + a.s - orig_.h).lpNorm<Eigen::Infinity>());
    a.pres = pres / (1.0 + bnorm_);
    VectorXd dr = orig_.c;
    if (p_) dr += orig_.A.transpose() * a.y;
    if (m_) dr += orig_.G.transpose() * a.z;
    a.dres = dr.lpNorm<Eigen::Infinity>() / (1.0 + cnorm_);
    a.pobj = orig_.c.dot(a.x);
    a.dobj = -(p_ ? orig_.b.dot(a.y) : 0.0) - (m_ ? orig_.h.dot(a.z) : 0.0);
    a.gap = std::abs(a.pobj - a.dobj) / (1.0 + std::abs(a.pobj));

    // Certificates use the un-normalized directions.
    const double by_hz = (p_ ? orig_.b.dot(y) : 0.0) + (m_ ? orig_.h.dot(z) : 0.0);
    if (by_hz < 0.0) {
      VectorXd r = VectorXd::Zero(n_);
      if (p_) r += orig_.A.transpose() * y;
      if (m_) r += orig_.G.transpose() * z;
      a.infeasible_cert = r.lpNorm<Eigen::Infinity>() <= settings_.feas_tol * (-by_hz) &&
                          it.kappa > it.tau * settings_.feas_tol;
    }
    const double cx = orig_.c.dot(x);
    if (cx < 0.0) {
      double r = 0.0;
      if (p_) r = (orig_.A * x).lpNorm<Eigen::Infinity>();
      if (m_) r = std::max(r, (orig_.G * x + s).lpNorm<Eigen::Infinity>());
      a.unbounded_cert = r <= settings_.feas_tol * (-cx) &&
                         it.kappa > it.tau * settings_.feas_tol;
    }
    return a;
  }

  SolveResult finish(const Iterate& it, SolveStatus status, int iterations) const {
    SolveResult r;
    r.iterations = iterations;
    const int n = n_;
    if (it.x.size() != n) {
      r.status = SolveStatus::kInaccurate;
      r.x.assign(n, 0.0);
      return r;
    }
    const Assessment a = assess(it);
    if (status == SolveStatus::kInaccurate || status == SolveStatus::kIterationLimit) {
      const bool loose = a.pres <= settings_.inaccurate_feas_tol &&
                         a.dres <= settings_.inaccurate_feas_tol &&
                         a.gap <= settings_.inaccurate_gap_tol;
      if (loose) status = SolveStatus::kInaccurate;
    }
    r.status = status;
    r.primal_residual = a.pres;
    r.dual_residual = a.dres;
    r.gap = a.gap;

    VectorXd x = a.x, y = a.y, z = a.z;
    if (status == SolveStatus::kInfeasible) {
      // Report the normalized Farkas certificate as duals.
      const double by_hz = orig_.b.dot(eq_.row_a.cwiseProduct(it.y)) +
                           orig_.h.dot(eq_.row_g.cwiseProduct(it.z));
      y = eq_.row_a.cwiseProduct(it.y) / (-by_hz);
      z = eq_.row_g.cwiseProduct(it.z) / (-by_hz);
      x.setZero();
    } else if (status == SolveStatus::kUnbounded) {
      const VectorXd ray = eq_.col.cwiseProduct(it.x);
      x = ray / (-orig_.c.dot(ray));
    }
    r.x.assign(x.data(), x.data() + n);
    r.eq_duals.assign(y.data(), y.data() + p_);
    r.ineq_duals.assign(z.data(), z.data() + sf_.num_ineq);
    r.primal_objective = a.pobj + program_.objective_offset();
    r.dual_objective = a.dobj + program_.objective_offset();
    r.cone_duals.assign(program_.num_cones(), {});
    for (int kidx = 0; kidx < program_.num_cones(); ++kidx) {
      const int row = sf_.degraded_row[kidx];
      if (row >= 0) r.cone_duals[kidx] = {z[row]};
    }
    for (std::size_t c = 0; c < sf_.cones.soc_dims.size(); ++c) {
      const int off = sf_.cones.soc_offsets[c];
      const int dim = sf_.cones.soc_dims[c];
      r.cone_duals[sf_.cone_program_index[c]].assign(z.data() + off, z.data() + off + dim);
    }
    return r;
  }

  const ConicProgram& program_;
  SolverSettings settings_;
  StandardForm sf_;
  StandardForm orig_;
  Equilibration eq_;
  NtScaling nt_;
  int n_ = 0, p_ = 0, m_ = 0;
  double bnorm_ = 0.0, cnorm_ = 0.0;
};

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, SolverBackend>& registry() {
  static std::map<std::string, SolverBackend> r{
      {"embedded", [](const ConicProgram& p, const SolverSettings& s) { return solve(p, s); }}};
  return r;
}

}  // namespace

SolveResult solve(const ConicProgram& program, const SolverSettings& settings) {
  program.validate();
  InteriorPoint ipm(program, settings);
  return ipm.run();
}

void register_backend(const std::string& id, SolverBackend backend) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  registry()[id] = std::move(backend);
}

std::vector<std::string> registered_backends() {
  std::lock_guard<std::mutex> lock(registry_mutex());
  std::vector<std::string> ids;
  for (const auto& [id, _] : registry()) ids.push_back(id);
  return ids;
}

SolveResult adapter_solve(const ConicProgram& program, const std::string& backend_id,
                          const SolverSettings& settings) {
  SolverBackend backend;
  {
    std::lock_guard<std::mutex> lock(registry_mutex());
    auto it = registry().find(backend_id);
    if (it == registry().end()) throw SolverError("unknown solver backend '" + backend_id + "'");
    backend = it->second;
  }
  program.validate();
  return backend(program, settings);
}

}  // namespace drssd
