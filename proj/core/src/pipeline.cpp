// SPDX-License-Identifier: Apache-2.0
#include "cef/pipeline.hpp"

#include <algorithm>
#include <string>

namespace cef {

std::string_view to_string(ProcessorType p) {
  switch (p) {
    case ProcessorType::Gnn: return "gnn";
    case ProcessorType::Transformer: return "transformer";
    case ProcessorType::CefTransformer: return "cef_transformer";
  }
  return "?";
}

std::string_view to_string(GateVariant g) {
  switch (g) {
    case GateVariant::None: return "none";
    case GateVariant::GnnTanhRelu: return "gnn_tanh_relu";
    case GateVariant::TransformerSigmoid: return "transformer_sigmoid";
    case GateVariant::Attention: return "attention";
    case GateVariant::Fixed: return "fixed";
  }
  return "?";
}

std::optional<ProcessorType> parse_processor(std::string_view s) {
  for (auto p : {ProcessorType::Gnn, ProcessorType::Transformer, ProcessorType::CefTransformer}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

std::optional<GateVariant> parse_gate(std::string_view s) {
  for (auto g : {GateVariant::None, GateVariant::GnnTanhRelu, GateVariant::TransformerSigmoid,
                 GateVariant::Attention, GateVariant::Fixed}) {
    if (to_string(g) == s) return g;
  }
  return std::nullopt;
}

void validate(const ModelConfig& c) {
  if (c.hidden < 1) {
    throw DomainError("hidden width must be positive");
  }
  const auto v = c.gate.variant;
  switch (c.processor) {
    case ProcessorType::Gnn:
      if (v == GateVariant::TransformerSigmoid) {
        throw ContractError("gate 'transformer_sigmoid' needs the cef_transformer processor");
      }
      break;
    case ProcessorType::Transformer:
      if (v != GateVariant::None) {
        throw ContractError("the plain transformer processor takes no gate; use cef_transformer");
      }
      break;
    case ProcessorType::CefTransformer:
      if (v != GateVariant::TransformerSigmoid && v != GateVariant::Fixed) {
        throw ContractError("cef_transformer needs gate 'transformer_sigmoid' or 'fixed'");
      }
      break;
  }
  if (!c.cross_attention && c.processor != ProcessorType::CefTransformer) {
    throw ContractError("disabling cross attention only applies to cef_transformer");
  }
  if (v == GateVariant::Fixed) {
    for (double a : {c.gate.alpha_node, c.gate.alpha_edge}) {
      if (!(a >= 0.0 && a <= 1.0)) {
        throw DomainError("fixed forget factor " + std::to_string(a) + " outside [0, 1]");
      }
    }
  }
  if (c.gate.activation &&
      v != GateVariant::GnnTanhRelu && v != GateVariant::TransformerSigmoid) {
    throw ContractError("a forget activation override needs a learned gate");
  }
}

ForgetActivation effective_activation(const ModelConfig& c) {
  if (c.gate.activation) {
    return *c.gate.activation;
  }
  return c.gate.variant == GateVariant::TransformerSigmoid ? ForgetActivation::Sigmoid
                                                          : ForgetActivation::TanhRelu;
}

Model::Model(TaskId task, ModelConfig config, std::uint64_t seed)
    : task_(task), config_(config) {
  validate(config_);
  Rng rng(seed);
  build(rng);
}

Model::Model(TaskId task, ModelConfig config, ParamStore params)
    : task_(task), config_(config) {
  validate(config_);
  Rng rng(0);
  build(rng);
  if (params.size() != params_.size()) {
    throw ContractError("checkpoint has " + std::to_string(params.size()) +
                        " parameter groups, model expects " + std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& want = params_[i];
    const auto& got = params[i];
    if (want.name != got.name || want.weights.rows() != got.weights.rows() ||
        want.weights.cols() != got.weights.cols()) {
      throw ContractError("checkpoint group '" + got.name + "' does not match model group '" +
                          want.name + "'");
    }
  }
  params_ = std::move(params);
}

void Model::build(Rng& rng) {
  const int d = config_.hidden;
  const bool edge_hidden = has_edge_hidden();
  for (const ProbeSpec& p : spec().probes) {
    if (p.stage == Stage::Output) {
      continue;
    }
    EncoderGroups g;
    if (p.kind == ProbeKind::NodeIndex) {
      g.main = params_.add("enc." + p.name + ".self", d, 1, rng);
      g.forward = params_.add("enc." + p.name + ".fwd", d, 1, rng);
      g.backward = params_.add("enc." + p.name + ".bwd", d, 1, rng);
    } else {
      g.main = params_.add("enc." + p.name, d, 1, rng);
    }
    encoders_.emplace(p.name, g);
  }

  if (config_.processor == ProcessorType::Gnn) {
    gnn_.f1 = params_.add("proc.f1", d, 2 * d, rng);
    gnn_.f2 = params_.add("proc.f2", d, 3 * d, rng);
    gnn_.f3 = params_.add("proc.f3", d, 2 * d, rng);
  } else {
    rt_.query = params_.add("proc.query", d, 4 * d, rng);
    rt_.key = params_.add("proc.key", d, 4 * d, rng);
    rt_.value = params_.add("proc.value", d, 4 * d, rng);
    rt_.node = params_.add("proc.node", d, 3 * d, rng);
    rt_.edge = params_.add("proc.edge", d, 6 * d, rng);
  }

  for (const ProbeSpec& p : spec().probes) {
    if (p.stage == Stage::Input) {
      continue;
    }
    DecoderGroups g;
    if (p.kind == ProbeKind::NodeIndex) {
      g.main = params_.add("dec." + p.name + ".owner", d, d, rng);
      g.target = params_.add("dec." + p.name + ".target", d, d, rng);
      g.self = params_.add("dec." + p.name + ".self", 1, d, rng);
      g.edge = params_.add("dec." + p.name + ".edge", 1, edge_hidden ? d : 3 * d, rng);
    } else if (p.location == Location::Node) {
      g.main = params_.add("dec." + p.name, 1, d, rng);
    } else {
      g.main = params_.add("dec." + p.name, 1, edge_hidden ? d : 2 * d, rng);
    }
    decoders_.emplace(p.name, g);
  }

  // Gate parameters come last so that base and context-enhanced models built
  // from one seed share every other initial weight.
  switch (config_.gate.variant) {
    case GateVariant::GnnTanhRelu:
      gate_node_ = params_.add("gate.node", 1, d, rng);
      break;
    case GateVariant::TransformerSigmoid:
      gate_node_ = params_.add("gate.node", 1, 2 * d, rng);
      gate_edge_ = params_.add("gate.edge", 1, 2 * d, rng);
      break;
    case GateVariant::Attention:
      attention_.query = params_.add("pre.query", d, d, rng);
      attention_.key = params_.add("pre.key", d, d, rng);
      attention_.value = params_.add("pre.value", d, d, rng);
      break;
    case GateVariant::None:
    case GateVariant::Fixed:
      break;
  }
}

const Model::EncoderGroups& Model::encoder(const std::string& probe) const {
  auto it = encoders_.find(probe);
  if (it == encoders_.end()) {
    throw ContractError("no encoder for probe '" + probe + "'");
  }
  return it->second;
}

const Model::DecoderGroups& Model::decoder(const std::string& probe) const {
  auto it = decoders_.find(probe);
  if (it == decoders_.end()) {
    throw ContractError("no decoder for probe '" + probe + "'");
  }
  return it->second;
}

namespace {

Var column_var(Tape& tape, const std::vector<double>& values) {
  Matrix m(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = values[i];
  }
  return tape.constant(std::move(m));
}

void accumulate(Tape& tape, Var& total, Var term) {
  total = total.valid() ? tape.add(total, term) : term;
}

}  // namespace

RecurrentState initial_state(Tape& tape, const Model& model, const GraphBatch& batch) {
  const int d = model.hidden();
  const auto& c = model.config();
  RecurrentState s;
  s.hidden_nodes = tape.zeros(batch.num_nodes, d);
  if (model.has_edge_hidden()) {
    s.hidden_edges = tape.zeros(batch.num_edges, d);
  }
  if (c.processor == ProcessorType::Gnn) {
    if (c.gate.variant == GateVariant::GnnTanhRelu || c.gate.variant == GateVariant::Fixed) {
      s.context_nodes = tape.zeros(batch.num_nodes, d);
    }
    if (c.gate.variant == GateVariant::Fixed) {
      s.context_hidden = tape.zeros(batch.num_nodes, d);
    }
  } else if (c.processor == ProcessorType::CefTransformer) {
    s.context_nodes = tape.zeros(batch.num_nodes, 2 * d);
    s.context_edges = tape.zeros(batch.num_edges, 2 * d);
  }
  return s;
}

LatentState encode(Tape& tape, const Model& model, const GraphBatch& batch,
                   const BatchFeatures& features) {
  for (const auto& [name, _] : features.real) {
    (void)model.encoder(name);
  }
  for (const auto& [name, _] : features.index) {
    (void)model.encoder(name);
  }
  Var nodes;
  Var edges;
  for (const ProbeSpec& p : model.spec().probes) {
    if (p.stage == Stage::Output) {
      continue;
    }
    const auto& enc = model.encoder(p.name);
    if (p.kind == ProbeKind::NodeIndex) {
      auto it = features.index.find(p.name);
      if (it == features.index.end()) {
        continue;
      }
      const auto& target = it->second;
      std::vector<double> self(static_cast<std::size_t>(batch.num_nodes));
      for (int v = 0; v < batch.num_nodes; ++v) {
        self[static_cast<std::size_t>(v)] = target[static_cast<std::size_t>(v)] == v ? 1.0 : 0.0;
      }
      std::vector<double> fwd(static_cast<std::size_t>(batch.num_edges));
      std::vector<double> bwd(static_cast<std::size_t>(batch.num_edges));
      for (int e = 0; e < batch.num_edges; ++e) {
        const int u = batch.src[static_cast<std::size_t>(e)];
        const int v = batch.dst[static_cast<std::size_t>(e)];
        fwd[static_cast<std::size_t>(e)] = target[static_cast<std::size_t>(v)] == u ? 1.0 : 0.0;
        bwd[static_cast<std::size_t>(e)] = target[static_cast<std::size_t>(u)] == v ? 1.0 : 0.0;
      }
      accumulate(tape, nodes, tape.linear(column_var(tape, self), enc.main));
      if (batch.num_edges > 0) {
        accumulate(tape, edges, tape.linear(column_var(tape, fwd), enc.forward));
        accumulate(tape, edges, tape.linear(column_var(tape, bwd), enc.backward));
      }
      continue;
    }
    auto it = features.real.find(p.name);
    if (it == features.real.end()) {
      continue;
    }
    const Var x = column_var(tape, it->second);
    if (p.location == Location::Node) {
      accumulate(tape, nodes, tape.linear(x, enc.main));
    } else if (batch.num_edges > 0) {
      accumulate(tape, edges, tape.linear(x, enc.main));
    }
  }
  const int d = model.hidden();
  if (!nodes.valid()) {
    nodes = tape.zeros(batch.num_nodes, d);
  }
  if (!edges.valid()) {
    edges = tape.zeros(batch.num_edges, d);
  }
  return {nodes, edges};
}

Var concat_state(Tape& tape, Var latent, Var hidden) {
  const Matrix& l = tape.value(latent);
  const Matrix& h = tape.value(hidden);
  if (l.rows() != h.rows() || l.cols() != h.cols()) {
    throw ShapeError("concat_state: latent and hidden shapes differ");
  }
  const Var parts[] = {latent, hidden};
  return tape.concat_cols(parts);
}

StepLogits decode(Tape& tape, const Model& model, const GraphBatch& batch, Var hidden_nodes,
                  Var hidden_edges, Var latent_edges) {
  const bool edge_hidden = model.has_edge_hidden();
  if (edge_hidden && !hidden_edges.valid()) {
    throw ContractError("decode: processor keeps edge states but none were given");
  }
  const int d = model.hidden();
  Var src_h;
  Var dst_h;
  auto endpoints = [&] {
    if (!src_h.valid()) {
      src_h = tape.gather_rows(hidden_nodes, batch.src);
      dst_h = tape.gather_rows(hidden_nodes, batch.dst);
    }
  };

  StepLogits out;
  for (const ProbeSpec& p : model.spec().probes) {
    if (p.stage == Stage::Input) {
      continue;
    }
    const auto& dec = model.decoder(p.name);
    if (p.kind == ProbeKind::NodeIndex) {
      const Var owner = tape.linear(hidden_nodes, dec.main);
      const Var target = tape.linear(hidden_nodes, dec.target);
      Var logits = tape.row_dot(tape.gather_rows(owner, batch.pair_owner),
                                tape.gather_rows(target, batch.pair_target));
      const Var self = tape.linear(hidden_nodes, dec.self);
      logits = tape.add(logits, tape.gather_rows(self, batch.pair_self));
      if (batch.num_edges > 0) {
        Var edge_term;
        if (edge_hidden) {
          edge_term = tape.linear(hidden_edges, dec.edge);
        } else {
          endpoints();
          edge_term = tape.add(tape.linear_partial(src_h, dec.edge, 0),
                               tape.linear_partial(dst_h, dec.edge, d));
          edge_term = tape.add(edge_term, tape.linear_partial(latent_edges, dec.edge, 2 * d));
          edge_term = tape.add_bias(edge_term, dec.edge);
        }
        logits = tape.add(logits, tape.gather_rows(edge_term, batch.pair_edge));
      }
      out.probes[p.name] = logits;
    } else if (p.location == Location::Node) {
      out.probes[p.name] = tape.linear(hidden_nodes, dec.main);
    } else if (edge_hidden) {
      out.probes[p.name] = tape.linear(hidden_edges, dec.main);
    } else {
      endpoints();
      const Var parts[] = {src_h, dst_h};
      out.probes[p.name] = tape.linear(tape.concat_cols(parts), dec.main);
    }
  }
  return out;
}

Var step_loss(Tape& tape, const Model& model, const GraphBatch& batch, const StepLogits& logits,
              const BatchFeatures& targets, Stage stage, std::span<const double> graph_weight,
              std::span<const double> norm_weight) {
  if (static_cast<int>(graph_weight.size()) != batch.num_graphs ||
      (!norm_weight.empty() && static_cast<int>(norm_weight.size()) != batch.num_graphs)) {
    throw ShapeError("step_loss: one weight per graph required");
  }
  if (norm_weight.empty()) {
    norm_weight = graph_weight;
  }
  std::vector<Var> terms;
  for (const ProbeSpec& p : model.spec().probes) {
    if (p.stage != stage) {
      continue;
    }
    auto lit = logits.probes.find(p.name);
    if (lit == logits.probes.end()) {
      throw ContractError("step_loss: no logits for probe '" + p.name + "'");
    }
    const bool on_edges = p.location == Location::Edge;
    const int count = on_edges ? batch.num_edges : batch.num_nodes;
    const auto& owner_graph = on_edges ? batch.edge_graph : batch.node_graph;
    double norm = 0.0;
    for (int i = 0; i < count; ++i) {
      norm += norm_weight[static_cast<std::size_t>(owner_graph[static_cast<std::size_t>(i)])];
    }
    if (norm <= 0.0) {
      continue;
    }
    std::vector<double> w(static_cast<std::size_t>(count));
    bool any = false;
    for (int i = 0; i < count; ++i) {
      w[static_cast<std::size_t>(i)] =
          graph_weight[static_cast<std::size_t>(owner_graph[static_cast<std::size_t>(i)])] / norm;
      any = any || w[static_cast<std::size_t>(i)] != 0.0;
    }
    if (!any) {
      continue;
    }
    if (p.kind == ProbeKind::NodeIndex) {
      auto tit = targets.index.find(p.name);
      if (tit == targets.index.end()) {
        throw ContractError("step_loss: no target for probe '" + p.name + "'");
      }
      std::vector<int> rows(static_cast<std::size_t>(batch.num_nodes));
      for (int v = 0; v < batch.num_nodes; ++v) {
        const int g = batch.node_graph[static_cast<std::size_t>(v)];
        const int off = batch.node_offset[static_cast<std::size_t>(g)];
        rows[static_cast<std::size_t>(v)] =
            batch.pair_id(g, v - off, tit->second[static_cast<std::size_t>(v)] - off);
      }
      terms.push_back(
          tape.softmax_xent(lit->second, batch.pair_owner, batch.num_nodes, rows, w));
      continue;
    }
    auto tit = targets.real.find(p.name);
    if (tit == targets.real.end()) {
      throw ContractError("step_loss: no target for probe '" + p.name + "'");
    }
    if (p.kind == ProbeKind::Mask) {
      terms.push_back(tape.bce_with_logits(lit->second, tit->second, w));
    } else {
      terms.push_back(tape.squared_error(lit->second, tit->second, w));
    }
  }
  if (terms.empty()) {
    return tape.zeros(1, 1);
  }
  return tape.sum(terms);
}

StepLogits run_step(Tape& tape, const Model& model, const GraphBatch& batch,
                    const BatchFeatures& step_input, RecurrentState& state) {
  const auto& cfg = model.config();
  const LatentState latent = encode(tape, model, batch, step_input);
  Var hidden_nodes;
  Var hidden_edges;

  if (cfg.processor == ProcessorType::Gnn) {
    Var enhanced = latent.nodes;
    Var hidden_prev = state.hidden_nodes;
    switch (cfg.gate.variant) {
      case GateVariant::None:
        break;
      case GateVariant::GnnTanhRelu: {
        const auto r = gnn_gate(tape, latent.nodes, state.context_nodes, model.gate_node(),
                                effective_activation(cfg));
        enhanced = r.enhanced;
        state.context_nodes = r.context_next;
        break;
      }
      case GateVariant::Attention: {
        auto r = attention_enhance(tape, latent.nodes, state.history, model.attention());
        enhanced = r.enhanced;
        state.history = std::move(r.history);
        break;
      }
      case GateVariant::Fixed: {
        const auto rs = fixed_gate(tape, latent.nodes, state.context_nodes, cfg.gate.alpha_node);
        enhanced = rs.enhanced;
        state.context_nodes = rs.context_next;
        const auto rh = fixed_gate(tape, state.hidden_nodes, state.context_hidden,
                                   cfg.gate.alpha_edge);
        hidden_prev = rh.enhanced;
        state.context_hidden = rh.context_next;
        break;
      }
      case GateVariant::TransformerSigmoid:
        throw ContractError("run_step: gate not available for the gnn processor");
    }
    const Var z = concat_state(tape, enhanced, hidden_prev);
    hidden_nodes = gnn_process(tape, batch, z, latent.edges, model.gnn());
  } else {
    const Var z_nodes = concat_state(tape, latent.nodes, state.hidden_nodes);
    const Var z_edges = concat_state(tape, latent.edges, state.hidden_edges);
    RtResult r;
    if (cfg.processor == ProcessorType::Transformer) {
      r = rt_process(tape, batch, z_nodes, z_edges, model.rt());
    } else {
      Var c_nodes;
      Var c_edges;
      if (cfg.gate.variant == GateVariant::Fixed) {
        c_nodes = fixed_gate(tape, z_nodes, state.context_nodes, cfg.gate.alpha_node).context_next;
        c_edges = fixed_gate(tape, z_edges, state.context_edges, cfg.gate.alpha_edge).context_next;
      } else {
        const auto act = effective_activation(cfg);
        const Var alpha_n = forget_factor(tape, state.context_nodes, model.gate_node(), act);
        c_nodes = tape.blend(alpha_n, state.context_nodes, z_nodes);
        const Var alpha_e = forget_factor(tape, state.context_edges, model.gate_edge(), act);
        c_edges = tape.blend(alpha_e, state.context_edges, z_edges);
      }
      state.context_nodes = c_nodes;
      state.context_edges = c_edges;
      r = cfg.cross_attention
              ? cef_rt_process(tape, batch, z_nodes, z_edges, c_nodes, c_edges, model.rt())
              : rt_process(tape, batch, c_nodes, c_edges, model.rt());
    }
    hidden_nodes = r.nodes;
    hidden_edges = r.edges;
  }

  state.hidden_nodes = hidden_nodes;
  state.hidden_edges = hidden_edges;
  state.step += 1;
  return decode(tape, model, batch, hidden_nodes, hidden_edges, latent.edges);
}

BatchFeatures harden(const Tape& tape, const Model& model, const GraphBatch& batch,
                     const StepLogits& logits) {
  BatchFeatures out;
  for (const ProbeSpec& p : model.spec().probes) {
    if (p.stage == Stage::Input) {
      continue;
    }
    const Matrix& z = tape.value(logits.probes.at(p.name));
    if (p.kind == ProbeKind::NodeIndex) {
      std::vector<int> pick(static_cast<std::size_t>(batch.num_nodes));
      for (int v = 0; v < batch.num_nodes; ++v) {
        const int g = batch.node_graph[static_cast<std::size_t>(v)];
        const int n = batch.graph_n[static_cast<std::size_t>(g)];
        const int off = batch.node_offset[static_cast<std::size_t>(g)];
        const int first = batch.pair_id(g, v - off, 0);
        int best = 0;
        for (int u = 1; u < n; ++u) {
          if (z(first + u, 0) > z(first + best, 0)) {
            best = u;
          }
        }
        pick[static_cast<std::size_t>(v)] = off + best;
      }
      out.index[p.name] = std::move(pick);
    } else {
      std::vector<double> v(static_cast<std::size_t>(z.rows()));
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        v[static_cast<std::size_t>(i)] =
            p.kind == ProbeKind::Mask ? (z(i, 0) > 0.0 ? 1.0 : 0.0) : z(i, 0);
      }
      out.real[p.name] = std::move(v);
    }
  }
  return out;
}

namespace {

std::vector<ProbeSpec> specs_of(const TaskSpec& spec, Stage stage) {
  std::vector<ProbeSpec> out;
  for (const auto& p : spec.probes) {
    if (p.stage == stage) {
      out.push_back(p);
    }
  }
  return out;
}

void copy_graph_rows(const GraphBatch& batch, const std::vector<ProbeSpec>& specs,
                     const BatchFeatures& from, BatchFeatures& to, int g) {
  const auto gi = static_cast<std::size_t>(g);
  const int n0 = batch.node_offset[gi];
  const int n1 = n0 + batch.graph_n[gi];
  const int e0 = batch.edge_offset[gi];
  const int e1 = g + 1 < batch.num_graphs ? batch.edge_offset[gi + 1] : batch.num_edges;
  for (const auto& p : specs) {
    if (p.kind == ProbeKind::NodeIndex) {
      auto& dst = to.index[p.name];
      dst.resize(static_cast<std::size_t>(batch.num_nodes), 0);
      const auto& src = from.index.at(p.name);
      std::copy(src.begin() + n0, src.begin() + n1, dst.begin() + n0);
    } else {
      const bool edges = p.location == Location::Edge;
      auto& dst = to.real[p.name];
      dst.resize(static_cast<std::size_t>(edges ? batch.num_edges : batch.num_nodes), 0.0);
      const auto& src = from.real.at(p.name);
      const int a = edges ? e0 : n0;
      const int b = edges ? e1 : n1;
      std::copy(src.begin() + a, src.begin() + b, dst.begin() + a);
    }
  }
}

BatchFeatures merged(const BatchFeatures& a, const BatchFeatures& b,
                     const std::vector<ProbeSpec>& b_specs) {
  BatchFeatures out = a;
  for (const auto& p : b_specs) {
    if (p.kind == ProbeKind::NodeIndex) {
      out.index[p.name] = b.index.at(p.name);
    } else {
      out.real[p.name] = b.real.at(p.name);
    }
  }
  return out;
}

BatchRollout rollout_impl(Tape& tape, const Model& model, std::span<const Trace* const> traces,
                          bool teacher_forcing, bool with_loss, const PredictionHook& hook,
                          std::vector<StepLogits>* record, GraphBatch* batch_out) {
  if (traces.empty()) {
    throw ContractError("rollout: empty batch");
  }
  const TaskSpec& spec = model.spec();
  std::vector<const Graph*> graphs;
  int max_t = 0;
  for (const Trace* t : traces) {
    if (t->task != to_string(spec.id)) {
      throw ContractError("rollout: trace of task '" + t->task + "' given to a " +
                          std::string(to_string(spec.id)) + " model");
    }
    graphs.push_back(&t->graph);
    max_t = std::max(max_t, t->T);
  }
  const GraphBatch batch = GraphBatch::from_graphs(graphs);
  const auto input_specs = specs_of(spec, Stage::Input);
  const auto hint_specs = specs_of(spec, Stage::Hint);
  const auto output_specs = specs_of(spec, Stage::Output);

  std::vector<const FeatureBundle*> bundles(traces.size());
  for (std::size_t g = 0; g < traces.size(); ++g) {
    bundles[g] = &traces[g]->inputs;
  }
  const BatchFeatures inputs = pack_features(batch, input_specs, bundles);
  BatchFeatures outputs_gt;
  if (with_loss) {
    for (std::size_t g = 0; g < traces.size(); ++g) {
      bundles[g] = &traces[g]->outputs;
    }
    outputs_gt = pack_features(batch, output_specs, bundles);
  }
  auto hints_at = [&](int t) {  // ground truth of step t, clamped per graph
    for (std::size_t g = 0; g < traces.size(); ++g) {
      const int k = std::min(t, traces[g]->T) - 1;
      bundles[g] = &traces[g]->hints[static_cast<std::size_t>(k)];
    }
    return pack_features(batch, hint_specs, bundles);
  };

  BatchRollout result;
  result.steps = max_t;
  RecurrentState state = initial_state(tape, model, batch);
  std::vector<Var> losses;
  std::vector<double> active(traces.size());
  std::vector<double> finishing(traces.size());
  const std::vector<double> ones(traces.size(), 1.0);
  BatchFeatures previous;

  for (int t = 1; t <= max_t; ++t) {
    BatchFeatures step_input = inputs;
    if (t >= 2) {
      step_input = teacher_forcing ? merged(inputs, hints_at(t - 1), hint_specs)
                                   : merged(inputs, previous, hint_specs);
    }
    StepLogits logits = run_step(tape, model, batch, step_input, state);
    if (with_loss) {
      for (std::size_t g = 0; g < traces.size(); ++g) {
        active[g] = t <= traces[g]->T ? 1.0 : 0.0;
        finishing[g] = t == traces[g]->T ? 1.0 : 0.0;
      }
      losses.push_back(
          step_loss(tape, model, batch, logits, hints_at(t), Stage::Hint, active));
      losses.push_back(step_loss(tape, model, batch, logits, outputs_gt, Stage::Output,
                                 finishing, ones));
    }
    BatchFeatures pred = harden(tape, model, batch, logits);
    if (hook) {
      hook(t, pred);
    }
    for (std::size_t g = 0; g < traces.size(); ++g) {
      if (traces[g]->T == t) {
        copy_graph_rows(batch, output_specs, pred, result.outputs, static_cast<int>(g));
      }
    }
    result.hints.push_back(pred);
    previous = std::move(pred);
    if (record != nullptr) {
      record->push_back(std::move(logits));
    }
  }
  if (with_loss) {
    result.loss = tape.sum(losses);
  }
  if (batch_out != nullptr) {
    *batch_out = batch;
  }
  return result;
}

}  // namespace

BatchRollout rollout_batch(Tape& tape, const Model& model, std::span<const Trace* const> traces,
                           bool teacher_forcing, bool with_loss, const PredictionHook& hook) {
  return rollout_impl(tape, model, traces, teacher_forcing, with_loss, hook, nullptr, nullptr);
}

std::vector<StepIO> rollout(const Model& model, const Trace& trace, bool teacher_forcing,
                            const PredictionHook& hook) {
  Tape tape(model.params());
  const Trace* one[] = {&trace};
  std::vector<StepLogits> logits;
  GraphBatch batch;
  const BatchRollout r =
      rollout_impl(tape, model, one, teacher_forcing, false, hook, &logits, &batch);
  const int n = trace.graph.n();
  const auto specs = model.spec().probes;
  std::vector<StepIO> out;
  for (int t = 1; t <= trace.T; ++t) {
    StepIO io;
    io.t = t;
    io.teacher_forced = teacher_forcing && t >= 2;
    for (const auto& [name, var] : logits[static_cast<std::size_t>(t - 1)].probes) {
      const ProbeSpec* p = trace.find_spec(name);
      const Matrix& z = tape.value(var);
      if (p != nullptr && p->kind == ProbeKind::NodeIndex) {
        Matrix m(n, n);
        for (int v = 0; v < n; ++v) {
          for (int u = 0; u < n; ++u) {
            m(v, u) = z(batch.pair_id(0, v, u), 0);
          }
        }
        io.logits[name] = std::move(m);
      } else {
        io.logits[name] = z;
      }
    }
    io.predictions = unpack_features(batch, specs, r.hints[static_cast<std::size_t>(t - 1)], 0);
    out.push_back(std::move(io));
  }
  return out;
}

}  // namespace cef
