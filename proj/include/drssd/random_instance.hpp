#pragma once

#include <cstdint>

#include "drssd/model.hpp"

namespace drssd {

/// Small synthetic instances for tests and the verify command.
///
/// Support: the box [0, box]^n. Samples and extra points sit on the integer
/// lattice of that box. Decision set: the simplex. Objective: minus the mean
/// sample return. Benchmark: a random simplex point.
struct RandomInstanceOptions {
  int dim = 2;
  int samples = 5;
  /// Extra lattice points beyond the samples that make up the finite support.
  int extra_points = 5;
  int box = 10;
  double radius_max = 0.5;
};

struct RandomInstance {
  SsdInstance instance;
  /// Finite support: the samples first, then the extra points, no repeats.
  MatrixXd points;
};

RandomInstance random_instance(std::uint64_t seed, const RandomInstanceOptions& options = {});

}  // namespace drssd
