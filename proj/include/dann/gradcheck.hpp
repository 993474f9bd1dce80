#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dann/layers.hpp"

namespace dann {

struct GradCheckEntry {
  std::string name;
  double worst_rel_err;
  bool pass;
};

constexpr double kGradCheckEps = 1e-6;
constexpr double kGradCheckTol = 1e-4;

/// Central finite-difference check of a layer's backward against its
/// forward, over every parameter element and every input element, with
/// a random upstream gradient. Returns the worst relative error.
double layer_gradcheck(Layer& layer, const Tensor& input, Rng& rng,
                       double eps = kGradCheckEps);

/// Full suite: every layer primitive plus the composite feature-trunk
/// gradient of a small two-head model, repeated over num_seeds seeds.
/// One entry per layer type with the worst error seen across seeds.
std::vector<GradCheckEntry> run_gradcheck_suite(std::uint64_t base_seed,
                                                std::size_t num_seeds = 5,
                                                double tol = kGradCheckTol,
                                                double eps = kGradCheckEps);

}  // namespace dann
