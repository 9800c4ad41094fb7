// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cef {

/// Row-major dense matrix. Rows index nodes, edges or pairs; columns index
/// feature channels.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller broke an API precondition that is not a shape problem.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Trainable affine map `weights * x + bias`.
struct ParamGroup {
  std::string name;
  Matrix weights;  // d_out x d_in
  Vector bias;     // d_out

  [[nodiscard]] int d_out() const { return static_cast<int>(weights.rows()); }
  [[nodiscard]] int d_in() const { return static_cast<int>(weights.cols()); }
};

/// Dense affine map on a single vector. Throws ShapeError when x has the
/// wrong length.
Vector linear(const ParamGroup& p, const Vector& x);

namespace act {

double tanh(double x);
double relu(double x);
/// Numerically stable logistic function.
double sigmoid(double x);
/// Softmax with max-shift; output entries are positive and sum to one.
Vector softmax(const Vector& x);
/// log(sum(exp(x))) with max-shift.
double logsumexp(std::span<const double> x);

}  // namespace act

}  // namespace cef
