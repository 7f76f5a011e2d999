#pragma once

#include <string>
#include <vector>

#include "drssd/conic_program.hpp"

namespace drssd {

enum class BoundType { kLower, kUpper, kClassic };

std::string to_string(BoundType type);

/// Outcome of one bound computation.
struct BoundReport {
  BoundType type = BoundType::kLower;
  double value = 0.0;              // f at the returned solution
  std::vector<double> solution;    // z
  std::vector<double> trace;       // objective after each outer iteration
  bool converged = false;
  /// Free-form status note ("not converged", "stopped at iteration limit").
  std::string note;
  int iterations = 0;              // outer iterations (cuts, SCA steps)
  int solver_iterations = 0;       // summed interior-point iterations
  SolveStatus last_status = SolveStatus::kOptimal;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  double seconds = 0.0;
};

}  // namespace drssd
