// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cef/autodiff.hpp"

namespace cef {

/// Squashing applied to the gate's scalar logit.
enum class ForgetActivation {
  TanhRelu,  // relu(tanh(x)), range [0, 1)
  Sigmoid,   // range (0, 1)
};

std::string_view to_string(ForgetActivation a);

/// Context-state update results. `enhanced` is what the processor consumes,
/// `alpha` the per-row forget factor (a column).
struct GateResult {
  Var enhanced;
  Var context_next;
  Var alpha;
};

/// alpha = act(linear(context)) with one scalar per row.
Var forget_factor(Tape& tape, Var context, std::size_t group, ForgetActivation activation);

/// Node gate for message-passing processors:
///   alpha = relu(tanh(f(c))),  s = c_next = alpha * c + (1 - alpha) * latent.
/// `group` maps d -> 1 and is shared by every node.
GateResult gnn_gate(Tape& tape, Var latent, Var context, std::size_t group,
                    ForgetActivation activation = ForgetActivation::TanhRelu);

/// Gate for attention processors over z = [latent || hidden_prev]:
///   alpha = sigmoid(f(c)),  c_next = alpha * c + (1 - alpha) * z.
/// Returns z as `enhanced`; both z and c_next feed the processor.
GateResult transformer_gate(Tape& tape, Var latent, Var hidden_prev, Var context,
                            std::size_t group,
                            ForgetActivation activation = ForgetActivation::Sigmoid);

/// Same blend with a constant alpha in [0, 1]; throws DomainError otherwise.
/// alpha = 0 returns `fresh` unchanged.
GateResult fixed_gate(Tape& tape, Var fresh, Var context, double alpha);

struct AttentionGroups {
  std::size_t query;
  std::size_t key;
  std::size_t value;
};

struct AttentionResult {
  Var enhanced;
  /// Most recent latent first; length grows by one per step.
  std::vector<Var> history;
  /// rows x (entries attended), each row sums to one.
  Var weights;
};

/// QKV attention of each row's latent over its stored latents. An empty
/// history attends over the current latent alone.
AttentionResult attention_enhance(Tape& tape, Var latent, std::span<const Var> history,
                                  const AttentionGroups& groups);

}  // namespace cef
