#pragma once

#include <functional>
#include <string>
#include <vector>

#include "drssd/conic_program.hpp"

namespace drssd {

/// Primal-dual interior-point method on the homogeneous self-dual embedding
/// over the product of the nonnegative orthant and second-order cones.
/// Nesterov-Todd scaling, Mehrotra predictor-corrector, Ruiz equilibration
/// and a regularized sparse LDL' factorization with iterative refinement.
///
/// Never throws on numerical trouble: the status says what happened and the
/// residual fields describe the returned iterate. Throws ProgramError if the
/// program fails validate().
SolveResult solve(const ConicProgram& program, const SolverSettings& settings = {});

using SolverBackend =
    std::function<SolveResult(const ConicProgram&, const SolverSettings&)>;

/// Registers (or replaces) a backend. "embedded" is always present.
void register_backend(const std::string& id, SolverBackend backend);
std::vector<std::string> registered_backends();

/// Validates the program, then dispatches to the named backend. Throws
/// SolverError for an unknown backend and ProgramError for a malformed
/// program; neither case reaches the backend.
SolveResult adapter_solve(const ConicProgram& program, const std::string& backend_id,
                          const SolverSettings& settings = {});

}  // namespace drssd
