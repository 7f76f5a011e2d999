#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "drssd/conic_program.hpp"

namespace drssd {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Membership tolerance for C xi <= d style checks.
inline constexpr double kFeasTol = 1e-9;
/// Two grid points closer than this (max-norm) are the same point.
inline constexpr double kDedupTol = 1e-12;

/// The support set {xi : C xi <= d}.
struct SupportPolytope {
  MatrixXd C;  // l x n
  VectorXd d;  // l

  int dim() const { return static_cast<int>(C.cols()); }
  int rows() const { return static_cast<int>(C.rows()); }
  bool contains(const VectorXd& xi, double tol = kFeasTol) const;

  /// Axis-aligned box lo <= xi <= hi as 2n rows.
  static SupportPolytope box(const VectorXd& lo, const VectorXd& hi);
};

/// Wasserstein-1 ball around the empirical distribution of the samples.
struct WassersteinBall {
  MatrixXd samples;  // N x n, one observation per row
  double radius = 0.0;

  int size() const { return static_cast<int>(samples.rows()); }
  int dim() const { return static_cast<int>(samples.cols()); }
};

/// Polyhedral decision set {z : A_ineq z <= b_ineq, A_eq z = b_eq}.
struct DecisionSet {
  MatrixXd A_ineq;
  VectorXd b_ineq;
  MatrixXd A_eq;
  VectorXd b_eq;

  bool contains(const VectorXd& z, double tol = 1e-9) const;
};

/// f(z) = linear'z + norm_weight * ||z||_2. The norm term is carried by an
/// epigraph variable so every master problem stays an LP/SOCP.
struct Objective {
  VectorXd linear;
  double norm_weight = 0.0;

  double evaluate(const VectorXd& z) const;
};

struct SsdInstance {
  Objective objective;
  DecisionSet decision_set;
  VectorXd benchmark;  // z0
  WassersteinBall ball;
  SupportPolytope support;

  int dim() const { return static_cast<int>(benchmark.size()); }
};

struct EtaRange {
  double r_min = 0.0;
  double r_max = 0.0;
  double width() const { return r_max - r_min; }
};

struct SampleGrids {
  MatrixXd xi;   // one support point per row
  VectorXd eta;  // benchmark levels
  /// Row of `xi` holding each observed sample, in ball order.
  std::vector<int> sample_rows;

  int num_xi() const { return static_cast<int>(xi.rows()); }
  int num_eta() const { return static_cast<int>(eta.size()); }
};

enum class GridMode { kGrid, kRandom };

GridMode parse_grid_mode(const std::string& s);
std::string to_string(GridMode mode);

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Throws InstanceError on dimension mismatches; reports semantic problems
/// (samples outside the support, infeasible benchmark, unbounded decision set
/// or support) in the returned list.
ValidationReport validate_instance(const SsdInstance& instance);

/// Throws InstanceError when the dimensions of the parts do not agree.
void check_dimensions(const SsdInstance& instance);

/// [min z0'xi, max z0'xi] over the support, each from an LP. Throws
/// InstanceError("support unbounded along benchmark") when either is
/// unbounded.
EtaRange eta_range(const SsdInstance& instance);

/// Support points and benchmark levels for the sample approximation.
///
/// kGrid: a uniform lattice with floor(n_xi^(1/n)) points per axis over the
/// support's bounding box, points outside the polytope dropped.
/// kRandom: n_xi - N uniform draws from the polytope by rejection from the
/// bounding box (seeded, deterministic).
/// In both modes the observed samples are appended and the set deduplicated.
/// Levels are n_eta equally spaced points on [r_min, r_max] (the midpoint when
/// n_eta == 1) plus every z0'xi_i, sorted and deduplicated.
SampleGrids generate_grids(const SsdInstance& instance, GridMode mode, int n_xi, int n_eta,
                           std::uint64_t seed);

/// Grids made exactly of the observed samples and their benchmark values.
SampleGrids empirical_grids(const SsdInstance& instance);

/// Variables the decision block occupies inside a larger program.
struct DecisionVars {
  int z = -1;         // first of n consecutive variables
  int epigraph = -1;  // t >= ||z|| when the objective has a norm term
};

/// Adds z, the rows of Z and the objective f(z) to `program`.
DecisionVars add_decision_block(ConicProgram& program, const SsdInstance& instance,
                                bool with_objective = true);

/// Adds z = value as equality rows.
void fix_decision(ConicProgram& program, const DecisionVars& vars, const VectorXd& value);

/// Deduplicates rows (max-norm within tol), keeping first occurrences.
MatrixXd unique_rows(const MatrixXd& points, double tol = kDedupTol);
VectorXd unique_sorted(std::vector<double> values, double tol = kDedupTol);

/// Euclidean distances between every row of `a` and every row of `b`.
MatrixXd pairwise_distances(const MatrixXd& a, const MatrixXd& b);

}  // namespace drssd
