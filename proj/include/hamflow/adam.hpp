#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hamflow/autodiff.hpp"

namespace hamflow {

struct AdamOptions {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators for a fixed, ordered list of parameters.
struct AdamState {
  AdamOptions options;
  std::vector<ad::Matrix> first_moment;
  std::vector<ad::Matrix> second_moment;
  std::int64_t step_count = 0;

  AdamState() = default;
  AdamState(std::span<ad::Parameter* const> params, AdamOptions opts);
};

/// Bias-corrected Adam update of `params` using each Parameter::grad.
void adam_step(AdamState& state, std::span<ad::Parameter* const> params);

}  // namespace hamflow
