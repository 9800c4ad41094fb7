// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "cef/numerics.hpp"
#include "cef/params.hpp"

namespace cef {

/// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
  [[nodiscard]] bool valid() const { return id >= 0; }
};

/// Reverse-mode tape over row-major matrices.
///
/// Every value is a Matrix whose rows index items (nodes, edges, node pairs)
/// and whose columns index features. Parameters enter only through the
/// `linear*` and `add_bias` operations, which read the bound ParamStore and
/// accumulate into the tape's Gradients on `backward`. The vocabulary is
/// closed: every model in this library is composed from the operations below.
///
/// Index lists use -1 to mean "no source row"; those rows read as zero.
class Tape {
 public:
  explicit Tape(const ParamStore& params);

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var zeros(Eigen::Index rows, Eigen::Index cols);

  // Affine maps reading parameter group `group`.
  Var linear(Var x, std::size_t group);
  /// x * W[:, col_begin : col_begin + x.cols]^T, no bias. Lets a linear layer
  /// over a concatenation be evaluated block-wise.
  Var linear_partial(Var x, std::size_t group, int col_begin);
  Var add_bias(Var x, std::size_t group);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scale(Var a, double factor);
  /// Row i of x multiplied by alpha(i, 0).
  Var mul_rowscalar(Var alpha, Var x);
  /// alpha * keep + (1 - alpha) * fresh, row-wise scalar alpha.
  Var blend(Var alpha, Var keep, Var fresh);
  Var concat_cols(std::span<const Var> parts);
  Var column(Var x, int col);
  Var gather_rows(Var x, std::span<const int> index);

  Var tanh(Var x);
  Var relu(Var x);
  Var sigmoid(Var x);
  /// Softmax along each row.
  Var softmax_rows(Var x);

  // Segment reductions: row r of x belongs to segment seg[r] in [0, count).
  /// Elementwise max per segment; empty segments yield zero.
  Var segment_max(Var x, std::span<const int> seg, int count);
  Var segment_sum(Var x, std::span<const int> seg, int count);
  /// Empty segments yield zero.
  Var segment_mean(Var x, std::span<const int> seg, int count);
  /// Softmax of a column vector within each segment.
  Var segment_softmax(Var scores, std::span<const int> seg, int count);

  /// Row-wise dot product of equally shaped matrices, giving a column.
  Var row_dot(Var a, Var b);
  Var sum_all(Var x);
  Var sum(std::span<const Var> scalars);

  // Weighted losses returning 1x1. Weights are per row; zero weight drops a row.
  Var bce_with_logits(Var logits, std::span<const double> target, std::span<const double> weight);
  Var squared_error(Var pred, std::span<const double> target, std::span<const double> weight);
  /// Softmax cross-entropy of a column of logits grouped into segments.
  /// `target_row[s]` is the row of the correct class in segment s.
  Var softmax_xent(Var logits, std::span<const int> seg, int count,
                   std::span<const int> target_row, std::span<const double> weight);

  [[nodiscard]] const Matrix& value(Var v) const { return nodes_.at(checked(v)).value; }
  [[nodiscard]] double scalar(Var v) const;
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

  /// Back-propagates from a 1x1 value. Throws ContractError otherwise.
  void backward(Var loss);
  [[nodiscard]] const Gradients& gradients() const { return grads_; }
  Gradients take_gradients() { return std::move(grads_); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&, const Matrix&)> backprop;
  };

  std::size_t checked(Var v) const;
  Var push(Matrix value, std::function<void(Tape&, const Matrix&)> backprop = {});
  void accumulate(Var v, const Matrix& g);
  void accumulate_block(Var v, const Matrix& g, Eigen::Index col_begin);

  const ParamStore& params_;
  Gradients grads_;
  std::vector<Node> nodes_;
};

/// Gradients of a scalar loss built by `loss_fn` on a fresh tape.
Gradients grad(const std::function<Var(Tape&)>& loss_fn, const ParamStore& params);

}  // namespace cef
