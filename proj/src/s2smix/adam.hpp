#pragma once

#include "s2smix/params.hpp"

namespace s2smix {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;  // global-norm gradient clipping; 0 disables
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long long t = 0;

  static AdamState zeros_like(const ParamSet& params);
};

// Clips the gradient to the configured global norm, then applies one Adam
// update in place.
void adam_step(ParamSet& params, GradientMap grads, AdamState& state, const AdamConfig& config);

}  // namespace s2smix
