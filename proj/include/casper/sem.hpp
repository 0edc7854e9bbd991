#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "casper/graph.hpp"

namespace casper {

struct LinearSemSpec {
  GroundTruthDag dag;
  Matrix coefficients;  // nonzero only on dag edges
  double noise_mean = 0.0;
  double noise_std = 1.0;
};

struct NonlinearSemSpec {
  GroundTruthDag dag;
  double kernel_bandwidth = 1.0;
  double noise_mean = 0.0;
  double noise_std = 1.0;
};

struct Dataset {
  Matrix values;  // n x d
  std::vector<std::string> names;
  int n() const { return static_cast<int>(values.rows()); }
  int d() const { return static_cast<int>(values.cols()); }
};

std::vector<std::string> default_names(int d);

// sign uniform, magnitude uniform in [0.5, 2]
LinearSemSpec sample_linear_weights(const GroundTruthDag& dag, uint64_t seed,
                                    double noise_mean = 0.0, double noise_std = 1.0);

Dataset simulate_linear(const LinearSemSpec& spec, int n, uint64_t seed);

// per-node function values drawn jointly from a squared-exponential GP at the
// observed parent inputs; roots are pure noise
Dataset simulate_nonlinear_gp(const NonlinearSemSpec& spec, int n, uint64_t seed);

}  // namespace casper
