// SPDX-License-Identifier: Apache-2.0
#include "cef/processors.hpp"

#include <cmath>

namespace cef {

Var gnn_process(Tape& tape, const GraphBatch& batch, Var z_nodes, Var s_edges,
                const GnnGroups& groups) {
  if (tape.value(z_nodes).rows() != batch.num_nodes ||
      tape.value(s_edges).rows() != batch.num_edges) {
    throw ShapeError("gnn_process: state rows do not match the batch");
  }
  const Var r = tape.relu(tape.linear(z_nodes, groups.f1));
  const auto d = static_cast<int>(tape.value(r).cols());

  // f2 over [r_v || r_u || s_(u,v)] evaluated block-wise: node blocks once per
  // node, then gathered onto edges.
  const Var own = tape.linear_partial(r, groups.f2, 0);
  const Var other = tape.linear_partial(r, groups.f2, d);
  const Var edge_part = tape.linear_partial(s_edges, groups.f2, 2 * d);
  Var pre = tape.add(tape.gather_rows(own, batch.dst), tape.gather_rows(other, batch.src));
  pre = tape.add_bias(tape.add(pre, edge_part), groups.f2);
  const Var messages = tape.relu(pre);
  const Var pooled = tape.segment_max(messages, batch.dst, batch.num_nodes);

  const Var parts[] = {r, pooled};
  return tape.linear(tape.concat_cols(parts), groups.f3);
}

namespace {

RtResult relational_attention(Tape& tape, const GraphBatch& batch, Var z_nodes, Var z_edges,
                              Var kv_nodes, Var kv_edges, const RtGroups& groups) {
  if (tape.value(z_nodes).rows() != batch.num_nodes ||
      tape.value(z_edges).rows() != batch.num_edges ||
      tape.value(kv_nodes).rows() != batch.num_nodes ||
      tape.value(kv_edges).rows() != batch.num_edges) {
    throw ShapeError("rt_process: state rows do not match the batch");
  }
  // Edge (v, u) is stored as src = v, dst = u; v's neighborhood is its out-edges.
  const Var edge_mean = tape.segment_mean(z_edges, batch.src, batch.num_nodes);
  const Var q_in[] = {z_nodes, edge_mean};
  const Var q = tape.linear(tape.concat_cols(q_in), groups.query);

  const Var kv_in[] = {tape.gather_rows(kv_nodes, batch.dst), kv_edges};
  const Var kv = tape.concat_cols(kv_in);
  const Var k = tape.linear(kv, groups.key);
  const Var val = tape.linear(kv, groups.value);

  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(tape.value(q).cols()));
  const Var score = tape.scale(tape.row_dot(tape.gather_rows(q, batch.src), k), inv_sqrt);
  const Var weight = tape.segment_softmax(score, batch.src, batch.num_nodes);
  const Var pool = tape.segment_sum(tape.mul_rowscalar(weight, val), batch.src, batch.num_nodes);

  const Var node_in[] = {z_nodes, pool};
  const Var h = tape.linear(tape.concat_cols(node_in), groups.node);

  const Var edge_in[] = {tape.gather_rows(h, batch.src), tape.gather_rows(h, batch.dst), kv_edges,
                         tape.gather_rows(kv_edges, batch.rev)};
  const Var he = tape.linear(tape.concat_cols(edge_in), groups.edge);
  return {h, he, weight};
}

}  // namespace

RtResult rt_process(Tape& tape, const GraphBatch& batch, Var z_nodes, Var z_edges,
                    const RtGroups& groups) {
  return relational_attention(tape, batch, z_nodes, z_edges, z_nodes, z_edges, groups);
}

RtResult cef_rt_process(Tape& tape, const GraphBatch& batch, Var z_nodes, Var z_edges,
                        Var context_nodes, Var context_edges, const RtGroups& groups) {
  return relational_attention(tape, batch, z_nodes, z_edges, context_nodes, context_edges, groups);
}

}  // namespace cef
