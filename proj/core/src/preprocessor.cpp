// SPDX-License-Identifier: Apache-2.0
#include "cef/preprocessor.hpp"

#include <cmath>
#include <string>

namespace cef {

std::string_view to_string(ForgetActivation a) {
  return a == ForgetActivation::TanhRelu ? "tanh_relu" : "sigmoid";
}

Var forget_factor(Tape& tape, Var context, std::size_t group, ForgetActivation activation) {
  const Var logit = tape.linear(context, group);
  if (tape.value(logit).cols() != 1) {
    throw ShapeError("forget_factor: gate layer must produce one scalar per row");
  }
  if (activation == ForgetActivation::TanhRelu) {
    return tape.relu(tape.tanh(logit));
  }
  return tape.sigmoid(logit);
}

GateResult gnn_gate(Tape& tape, Var latent, Var context, std::size_t group,
                    ForgetActivation activation) {
  const Matrix& l = tape.value(latent);
  const Matrix& c = tape.value(context);
  if (l.rows() != c.rows() || l.cols() != c.cols()) {
    throw ShapeError("gnn_gate: latent and context shapes differ");
  }
  const Var alpha = forget_factor(tape, context, group, activation);
  const Var s = tape.blend(alpha, context, latent);
  return {s, s, alpha};
}

GateResult transformer_gate(Tape& tape, Var latent, Var hidden_prev, Var context,
                            std::size_t group, ForgetActivation activation) {
  const Var parts[] = {latent, hidden_prev};
  const Var z = tape.concat_cols(parts);
  const Matrix& c = tape.value(context);
  if (tape.value(z).rows() != c.rows() || tape.value(z).cols() != c.cols()) {
    throw ShapeError("transformer_gate: context must be as wide as [latent || hidden]");
  }
  const Var alpha = forget_factor(tape, context, group, activation);
  return {z, tape.blend(alpha, context, z), alpha};
}

GateResult fixed_gate(Tape& tape, Var fresh, Var context, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw DomainError("fixed_gate: alpha " + std::to_string(alpha) + " outside [0, 1]");
  }
  const Matrix& x = tape.value(fresh);
  const Matrix& c = tape.value(context);
  if (x.rows() != c.rows() || x.cols() != c.cols()) {
    throw ShapeError("fixed_gate: input and context shapes differ");
  }
  const Var a = tape.constant(Matrix::Constant(x.rows(), 1, alpha));
  const Var s = tape.blend(a, context, fresh);
  return {s, s, a};
}

AttentionResult attention_enhance(Tape& tape, Var latent, std::span<const Var> history,
                                  const AttentionGroups& groups) {
  std::vector<Var> entries(history.begin(), history.end());
  if (entries.empty()) {
    entries.push_back(latent);
  }
  const Var q = tape.linear(latent, groups.query);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(tape.value(q).cols()));
  std::vector<Var> scores;
  std::vector<Var> values;
  scores.reserve(entries.size());
  values.reserve(entries.size());
  for (Var e : entries) {
    if (tape.value(e).rows() != tape.value(latent).rows()) {
      throw ShapeError("attention_enhance: history entry has wrong row count");
    }
    const Var k = tape.linear(e, groups.key);
    scores.push_back(tape.scale(tape.row_dot(q, k), inv_sqrt));
    values.push_back(tape.linear(e, groups.value));
  }
  const Var w = tape.softmax_rows(tape.concat_cols(scores));
  Var s = tape.mul_rowscalar(tape.column(w, 0), values[0]);
  for (std::size_t j = 1; j < values.size(); ++j) {
    s = tape.add(s, tape.mul_rowscalar(tape.column(w, static_cast<int>(j)), values[j]));
  }
  AttentionResult out{s, {}, w};
  out.history.reserve(history.size() + 1);
  out.history.push_back(latent);
  out.history.insert(out.history.end(), history.begin(), history.end());
  return out;
}

}  // namespace cef
