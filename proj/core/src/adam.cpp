// SPDX-License-Identifier: Apache-2.0
#include "cef/adam.hpp"

#include <cmath>
#include <string>

namespace cef {

OptimizerState OptimizerState::for_params(const ParamStore& params) {
  return OptimizerState{Gradients::zeros_like(params), Gradients::zeros_like(params), 0};
}

namespace {

template <typename Param, typename Moment>
void update(Param& x, const Moment& g, Moment& m, Moment& v, double lr, double b1, double b2,
            double eps, double c1, double c2) {
  m = b1 * m + (1.0 - b1) * g;
  v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
  x.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

}  // namespace

void adam_step(ParamStore& params, const Gradients& grads, OptimizerState& state,
               const AdamConfig& config) {
  if (config.learning_rate < 0.0) {
    throw DomainError("adam_step: learning rate must be non-negative");
  }
  const std::size_t n = params.size();
  if (grads.weights.size() != n || grads.bias.size() != n ||
      state.first_moment.weights.size() != n || state.second_moment.weights.size() != n) {
    throw ShapeError("adam_step: gradient/state group count does not match parameters");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const ParamGroup& p = params[i];
    if (grads.weights[i].rows() != p.weights.rows() || grads.weights[i].cols() != p.weights.cols() ||
        grads.bias[i].size() != p.bias.size() ||
        state.first_moment.weights[i].rows() != p.weights.rows() ||
        state.first_moment.weights[i].cols() != p.weights.cols()) {
      throw ShapeError("adam_step: shape mismatch in group '" + p.name + "'");
    }
  }

  state.step += 1;
  const auto t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    ParamGroup& p = params[i];
    update(p.weights, grads.weights[i], state.first_moment.weights[i],
           state.second_moment.weights[i], config.learning_rate, config.beta1, config.beta2,
           config.epsilon, c1, c2);
    update(p.bias, grads.bias[i], state.first_moment.bias[i], state.second_moment.bias[i],
           config.learning_rate, config.beta1, config.beta2, config.epsilon, c1, c2);
  }
}

}  // namespace cef
