// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "cef/params.hpp"

namespace cef {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment accumulators mirroring a ParamStore.
struct OptimizerState {
  Gradients first_moment;
  Gradients second_moment;
  std::int64_t step = 0;

  static OptimizerState for_params(const ParamStore& params);
};

/// One bias-corrected Adam update in place. Increments state.step by one.
void adam_step(ParamStore& params, const Gradients& grads, OptimizerState& state,
               const AdamConfig& config);

}  // namespace cef
