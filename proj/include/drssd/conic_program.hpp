#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace drssd {

/// One coefficient of a sparse linear form.
struct Term {
  int var;
  double coef;
};

/// Sparse linear form plus constant: sum(coef * x[var]) + constant.
struct AffineExpr {
  std::vector<Term> terms;
  double constant = 0.0;

  AffineExpr() = default;
  AffineExpr(std::vector<Term> t, double c = 0.0)
      : terms(std::move(t)), constant(c) {}

  AffineExpr& add(int var, double coef) {
    terms.push_back({var, coef});
    return *this;
  }
};

/// Second-order cone constraint ||components|| <= bound, each side affine.
struct SocConstraint {
  std::vector<AffineExpr> components;
  AffineExpr bound;
};

struct LinearRow {
  std::vector<Term> terms;
  double rhs = 0.0;
};

/// A linear/second-order-cone program in builder form:
///
///   minimize    c'x + offset
///   subject to  A_eq x  = b_eq
///               A_in x <= b_in
///               ||F_k x + g_k|| <= a_k'x + b_k   for each cone k
///               lb <= x <= ub
///
/// Rows are stored sparsely; duplicate (row, var) terms are summed when the
/// program is canonicalized.
class ConicProgram {
 public:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  ConicProgram() = default;

  /// Appends `count` variables and returns the index of the first one.
  int add_variables(int count, double lb = -kInf, double ub = kInf);
  int add_variable(double lb = -kInf, double ub = kInf) {
    return add_variables(1, lb, ub);
  }

  void set_objective(int var, double coef);
  void add_objective(int var, double coef);
  void set_objective_offset(double offset) { offset_ = offset; }

  /// Returns the row index within the equality group.
  int add_equal(std::vector<Term> terms, double rhs);
  /// Returns the row index within the inequality group.
  int add_less_equal(std::vector<Term> terms, double rhs);
  int add_greater_equal(std::vector<Term> terms, double rhs);
  /// Returns the cone index within the SOC group.
  int add_soc(SocConstraint cone);

  void set_bounds(int var, double lb, double ub);

  int num_variables() const { return static_cast<int>(objective_.size()); }
  int num_equalities() const { return static_cast<int>(equalities_.size()); }
  int num_inequalities() const { return static_cast<int>(inequalities_.size()); }
  int num_cones() const { return static_cast<int>(cones_.size()); }
  bool is_linear() const { return cones_.empty(); }

  const std::vector<double>& objective() const { return objective_; }
  double objective_offset() const { return offset_; }
  const std::vector<LinearRow>& equalities() const { return equalities_; }
  const std::vector<LinearRow>& inequalities() const { return inequalities_; }
  const std::vector<SocConstraint>& cones() const { return cones_; }
  const std::vector<double>& lower_bounds() const { return lb_; }
  const std::vector<double>& upper_bounds() const { return ub_; }

  /// Throws ProgramError on out-of-range indices, non-finite coefficients or
  /// inverted bounds.
  void validate() const;

  /// Objective value c'x + offset at x.
  double evaluate_objective(const std::vector<double>& x) const;

  /// Largest violation of any constraint at x (0 when feasible).
  double max_violation(const std::vector<double>& x) const;

 private:
  std::vector<double> objective_;
  double offset_ = 0.0;
  std::vector<double> lb_;
  std::vector<double> ub_;
  std::vector<LinearRow> equalities_;
  std::vector<LinearRow> inequalities_;
  std::vector<SocConstraint> cones_;
};

enum class SolveStatus {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kInaccurate,
  kIterationLimit,
};

std::string to_string(SolveStatus status);

struct SolverSettings {
  double feas_tol = 1e-9;
  double gap_tol = 1e-10;
  int max_iter = 200;
  int equilibration_sweeps = 5;
  /// Residuals within these looser tolerances yield kInaccurate rather than
  /// a hard failure when the iteration stalls.
  double inaccurate_feas_tol = 1e-5;
  double inaccurate_gap_tol = 1e-5;
  bool verbose = false;
};

struct SolveResult {
  SolveStatus status = SolveStatus::kInaccurate;
  std::vector<double> x;
  /// Multipliers of the equality rows (free sign).
  std::vector<double> eq_duals;
  /// Multipliers of the inequality rows (nonnegative).
  std::vector<double> ineq_duals;
  /// Per-cone dual vectors (t, u) with ||u|| <= t, ordered (bound, components).
  std::vector<std::vector<double>> cone_duals;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  /// |primal - dual| / (1 + |primal|).
  double gap = 0.0;
  int iterations = 0;

  bool optimal() const { return status == SolveStatus::kOptimal; }
};

}  // namespace drssd
