#include "drssd/conic_program.hpp"

#include <algorithm>
#include <cmath>

#include "drssd/error.hpp"

namespace drssd {

int ConicProgram::add_variables(int count, double lb, double ub) {
  if (count < 0) throw ProgramError("negative variable count");
  const int first = num_variables();
  objective_.resize(objective_.size() + count, 0.0);
  lb_.resize(lb_.size() + count, lb);
  ub_.resize(ub_.size() + count, ub);
  return first;
}

void ConicProgram::set_objective(int var, double coef) {
  if (var < 0 || var >= num_variables())
    throw ProgramError("objective index out of range");
  objective_[var] = coef;
}

void ConicProgram::add_objective(int var, double coef) {
  if (var < 0 || var >= num_variables())
    throw ProgramError("objective index out of range");
  objective_[var] += coef;
}

int ConicProgram::add_equal(std::vector<Term> terms, double rhs) {
  equalities_.push_back({std::move(terms), rhs});
  return num_equalities() - 1;
}

int ConicProgram::add_less_equal(std::vector<Term> terms, double rhs) {
  inequalities_.push_back({std::move(terms), rhs});
  return num_inequalities() - 1;
}

int ConicProgram::add_greater_equal(std::vector<Term> terms, double rhs) {
  for (auto& t : terms) t.coef = -t.coef;
  return add_less_equal(std::move(terms), -rhs);
}

int ConicProgram::add_soc(SocConstraint cone) {
  cones_.push_back(std::move(cone));
  return num_cones() - 1;
}

void ConicProgram::set_bounds(int var, double lb, double ub) {
  if (var < 0 || var >= num_variables())
    throw ProgramError("bound index out of range");
  lb_[var] = lb;
  ub_[var] = ub;
}

namespace {

void check_terms(const std::vector<Term>& terms, int n, const char* where) {
  for (const auto& t : terms) {
    if (t.var < 0 || t.var >= n)
      throw ProgramError(std::string(where) + ": variable index " +
                         std::to_string(t.var) + " outside [0, " +
                         std::to_string(n) + ")");
    if (!std::isfinite(t.coef))
      throw ProgramError(std::string(where) + ": non-finite coefficient");
  }
}

double eval(const std::vector<Term>& terms, const std::vector<double>& x) {
  double v = 0.0;
  for (const auto& t : terms) v += t.coef * x[t.var];
  return v;
}

double eval(const AffineExpr& e, const std::vector<double>& x) {
  return eval(e.terms, x) + e.constant;
}

}  // namespace

void ConicProgram::validate() const {
  const int n = num_variables();
  for (double c : objective_)
    if (!std::isfinite(c)) throw ProgramError("objective: non-finite coefficient");
  if (!std::isfinite(offset_)) throw ProgramError("objective: non-finite offset");
  for (const auto& r : equalities_) {
    check_terms(r.terms, n, "equality row");
    if (!std::isfinite(r.rhs)) throw ProgramError("equality row: non-finite rhs");
  }
  for (const auto& r : inequalities_) {
    check_terms(r.terms, n, "inequality row");
    if (!std::isfinite(r.rhs)) throw ProgramError("inequality row: non-finite rhs");
  }
  for (const auto& k : cones_) {
    check_terms(k.bound.terms, n, "cone bound");
    if (!std::isfinite(k.bound.constant))
      throw ProgramError("cone bound: non-finite constant");
    for (const auto& c : k.components) {
      check_terms(c.terms, n, "cone component");
      if (!std::isfinite(c.constant))
        throw ProgramError("cone component: non-finite constant");
    }
  }
  for (int j = 0; j < n; ++j) {
    if (std::isnan(lb_[j]) || std::isnan(ub_[j]) || lb_[j] > ub_[j])
      throw ProgramError("variable " + std::to_string(j) + ": invalid bounds");
    if (lb_[j] == kInf || ub_[j] == -kInf)
      throw ProgramError("variable " + std::to_string(j) + ": infinite bound on wrong side");
  }
}

double ConicProgram::evaluate_objective(const std::vector<double>& x) const {
  double v = offset_;
  for (std::size_t j = 0; j < objective_.size(); ++j) v += objective_[j] * x[j];
  return v;
}

double ConicProgram::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (const auto& r : equalities_)
    worst = std::max(worst, std::abs(eval(r.terms, x) - r.rhs));
  for (const auto& r : inequalities_)
    worst = std::max(worst, eval(r.terms, x) - r.rhs);
  for (const auto& k : cones_) {
    double sq = 0.0;
    for (const auto& c : k.components) {
      const double v = eval(c, x);
      sq += v * v;
    }
    worst = std::max(worst, std::sqrt(sq) - eval(k.bound, x));
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    worst = std::max(worst, lb_[j] - x[j]);
    worst = std::max(worst, x[j] - ub_[j]);
  }
  return worst;
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kInaccurate: return "inaccurate";
    case SolveStatus::kIterationLimit: return "iteration_limit";
  }
  return "unknown";
}

}  // namespace drssd
