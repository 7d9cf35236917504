#include "s2smix/adam.hpp"

#include <cmath>

#include "s2smix/error.hpp"

namespace s2smix {

AdamState AdamState::zeros_like(const ParamSet& params) {
  AdamState s;
  s.m.reserve(params.tensors.size());
  s.v.reserve(params.tensors.size());
  for (const Tensor& t : params.tensors) {
    s.m.push_back(Tensor::zeros(t.shape));
    s.v.push_back(Tensor::zeros(t.shape));
  }
  return s;
}

void adam_step(ParamSet& params, GradientMap grads, AdamState& state, const AdamConfig& config) {
  if (grads.grads.size() != params.tensors.size()) {
    throw NumericError("adam_step: gradient map does not match parameter set");
  }
  if (config.clip_norm > 0.0) {
    const double norm = grads.global_norm();
    if (norm > config.clip_norm) grads.scale(config.clip_norm / norm);
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (size_t p = 0; p < params.tensors.size(); ++p) {
    Tensor& theta = params.tensors[p];
    Tensor& m = state.m[p];
    Tensor& v = state.v[p];
    const Tensor& g = grads.grads[p];
    for (size_t i = 0; i < theta.values.size(); ++i) {
      m.values[i] = config.beta1 * m.values[i] + (1.0 - config.beta1) * g.values[i];
      v.values[i] = config.beta2 * v.values[i] + (1.0 - config.beta2) * g.values[i] * g.values[i];
      const double m_hat = m.values[i] / bc1;
      const double v_hat = v.values[i] / bc2;
      theta.values[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

}  // namespace s2smix
