// SPDX-License-Identifier: Apache-2.0
#include "cef/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace cef {

Vector linear(const ParamGroup& p, const Vector& x) {
  if (x.size() != p.weights.cols()) {
    throw ShapeError("linear '" + p.name + "': expected input of length " +
                     std::to_string(p.weights.cols()) + ", got " + std::to_string(x.size()));
  }
  if (p.bias.size() != p.weights.rows()) {
    throw ShapeError("linear '" + p.name + "': bias length does not match weights");
  }
  return p.weights * x + p.bias;
}

namespace act {

double tanh(double x) { return std::tanh(x); }

double relu(double x) { return x > 0.0 ? x : 0.0; }

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector softmax(const Vector& x) {
  if (x.size() == 0) {
    return x;
  }
  const double shift = x.maxCoeff();
  Vector out = (x.array() - shift).exp().matrix();
  out /= out.sum();
  return out;
}

double logsumexp(std::span<const double> x) {
  if (x.empty()) {
    return -INFINITY;
  }
  const double shift = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (double v : x) {
    total += std::exp(v - shift);
  }
  return shift + std::log(total);
}

}  // namespace act

}  // namespace cef
