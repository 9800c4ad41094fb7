// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cef/autodiff.hpp"
#include "cef/batch.hpp"
#include "cef/params.hpp"
#include "cef/preprocessor.hpp"
#include "cef/processors.hpp"
#include "cef/tasks.hpp"

namespace cef {

enum class ProcessorType { Gnn, Transformer, CefTransformer };

enum class GateVariant {
  None,                // plain encode-process-decode
  GnnTanhRelu,         // learned node gate for the message-passing processor
  TransformerSigmoid,  // learned node + edge gates over [latent || hidden]
  Attention,           // QKV attention over stored latents (message passing only)
  Fixed,               // constant forget factors
};

std::string_view to_string(ProcessorType p);
std::string_view to_string(GateVariant g);
std::optional<ProcessorType> parse_processor(std::string_view s);
std::optional<GateVariant> parse_gate(std::string_view s);

struct GateConfig {
  GateVariant variant = GateVariant::None;
  /// Fixed variant only. Message passing: alpha_node blends the latent
  /// context, alpha_edge the hidden-state context. Attention processors:
  /// node and edge contexts respectively.
  double alpha_node = 0.0;
  double alpha_edge = 0.0;
  /// Overrides the variant's default squashing (gate-swap ablation).
  std::optional<ForgetActivation> activation;
};

struct ModelConfig {
  ProcessorType processor = ProcessorType::Gnn;
  GateConfig gate;
  int hidden = 64;
  /// CefTransformer only. When false, z is replaced by the context states and
  /// the plain relational attention runs on them.
  bool cross_attention = true;
};

/// Throws ContractError/DomainError on incompatible processor/gate choices.
void validate(const ModelConfig& config);
ForgetActivation effective_activation(const ModelConfig& config);

/// Parameters and layout for one task. Parameter groups are created in a
/// fixed order so that the same seed always yields the same store.
class Model {
 public:
  Model(TaskId task, ModelConfig config, std::uint64_t seed);
  /// Adopts existing parameters; throws ContractError if the layout differs.
  Model(TaskId task, ModelConfig config, ParamStore params);

  [[nodiscard]] TaskId task() const { return task_; }
  [[nodiscard]] const TaskSpec& spec() const { return task_spec(task_); }
  [[nodiscard]] const ModelConfig& config() const { return config_; }
  [[nodiscard]] int hidden() const { return config_.hidden; }
  [[nodiscard]] const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }

  [[nodiscard]] bool has_edge_hidden() const { return config_.processor != ProcessorType::Gnn; }

  struct EncoderGroups {
    std::size_t main = 0;  // scalar/mask probes; self channel for node_index
    std::size_t forward = 0;   // node_index: edge (pi(v) -> v)
    std::size_t backward = 0;  // node_index: edge (v -> pi(v))
  };
  struct DecoderGroups {
    std::size_t main = 0;  // scalar/mask probes; owner projection for node_index
    std::size_t target = 0;
    std::size_t self = 0;
    std::size_t edge = 0;
  };

  [[nodiscard]] const EncoderGroups& encoder(const std::string& probe) const;
  [[nodiscard]] const DecoderGroups& decoder(const std::string& probe) const;
  [[nodiscard]] const GnnGroups& gnn() const { return gnn_; }
  [[nodiscard]] const RtGroups& rt() const { return rt_; }
  [[nodiscard]] std::size_t gate_node() const { return gate_node_; }
  [[nodiscard]] std::size_t gate_edge() const { return gate_edge_; }
  [[nodiscard]] const AttentionGroups& attention() const { return attention_; }

 private:
  void build(Rng& rng);

  TaskId task_;
  ModelConfig config_;
  ParamStore params_;
  std::map<std::string, EncoderGroups> encoders_;
  std::map<std::string, DecoderGroups> decoders_;
  GnnGroups gnn_{};
  RtGroups rt_{};
  AttentionGroups attention_{};
  std::size_t gate_node_ = 0;
  std::size_t gate_edge_ = 0;
};

/// Per-node and per-edge latents.
struct LatentState {
  Var nodes;  // num_nodes x d
  Var edges;  // num_edges x d
};

/// Recurrent memory threaded through the steps of one rollout.
struct RecurrentState {
  Var hidden_nodes;    // num_nodes x d
  Var hidden_edges;    // num_edges x d, attention processors only
  Var context_nodes;   // d wide (message passing) or 2d wide (attention)
  Var context_edges;   // 2d wide, attention processors only
  Var context_hidden;  // fixed-gate message passing: context of the hidden state
  std::vector<Var> history;  // attention preprocessor
  int step = 0;
};

/// Decoded values per hint/output probe: node probes num_nodes x 1, edge
/// probes num_edges x 1, node_index probes num_pairs x 1 logits.
struct StepLogits {
  std::map<std::string, Var> probes;
};

RecurrentState initial_state(Tape& tape, const Model& model, const GraphBatch& batch);

/// Per-probe linear encoders summed per location. Node-index probes are
/// routed onto the owner (self pointer) and onto the edges joining owner and
/// target, in both directions.
LatentState encode(Tape& tape, const Model& model, const GraphBatch& batch,
                   const BatchFeatures& features);

/// [latent || hidden] per row; widths must match.
Var concat_state(Tape& tape, Var latent, Var hidden);

/// Per-probe decoders. Edge probes and the edge term of node-index logits use
/// the edge hidden state when the processor keeps one, and endpoint hidden
/// states (plus the edge latent for node-index) otherwise.
StepLogits decode(Tape& tape, const Model& model, const GraphBatch& batch, Var hidden_nodes,
                  Var hidden_edges, Var latent_edges);

/// Loss of one step against `targets` for probes of `stage`:
///   mask -> binary cross-entropy, node_index -> softmax cross-entropy over
///   the owner's graph, scalar -> squared error.
/// Each probe contributes the weighted mean over its elements; probe losses
/// are summed. graph_weight zeroes out graphs that do not take part. The mean
/// divides by the element count weighted by `norm_weight` (defaults to
/// graph_weight), which lets per-step pieces add up to a batch mean.
Var step_loss(Tape& tape, const Model& model, const GraphBatch& batch, const StepLogits& logits,
              const BatchFeatures& targets, Stage stage, std::span<const double> graph_weight,
              std::span<const double> norm_weight = {});

/// One reasoning step: encode, preprocess, process, decode.
StepLogits run_step(Tape& tape, const Model& model, const GraphBatch& batch,
                    const BatchFeatures& step_input, RecurrentState& state);

/// Hard predictions: threshold for masks, argmax for node_index, identity for
/// scalars. Covers every hint and output probe.
BatchFeatures harden(const Tape& tape, const Model& model, const GraphBatch& batch,
                     const StepLogits& logits);

/// Called with (step, hardened predictions) before they feed the next step.
using PredictionHook = std::function<void(int, BatchFeatures&)>;

struct BatchRollout {
  Var loss;  // invalid when no loss was requested
  int steps = 0;
  /// hints[t-1]: hardened hint predictions of step t for every graph.
  std::vector<BatchFeatures> hints;
  /// Output predictions of each graph taken at its own final step.
  BatchFeatures outputs;
};

/// Runs max_g T_g steps over a batch. With teacher forcing, step t >= 2
/// consumes the ground-truth hints of step t-1; otherwise it consumes the
/// previous step's hardened predictions. Step 1 sees inputs only. Losses of
/// graph g cover hints at steps <= T_g and outputs at step T_g.
BatchRollout rollout_batch(Tape& tape, const Model& model, std::span<const Trace* const> traces,
                           bool teacher_forcing, bool with_loss,
                           const PredictionHook& hook = {});

/// Single-trace record of one step.
struct StepIO {
  int t = 0;
  bool teacher_forced = false;
  /// Node probes: n x 1; edge probes: edge_count x 1 in graph edge order;
  /// node_index probes: n x n with row = owner.
  std::map<std::string, Matrix> logits;
  FeatureBundle predictions;
};

std::vector<StepIO> rollout(const Model& model, const Trace& trace, bool teacher_forcing,
                            const PredictionHook& hook = {});

}  // namespace cef
