// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "cef/autodiff.hpp"
#include "cef/batch.hpp"

namespace cef {

/// f1: 2d -> d, f2: 3d -> d, f3: 2d -> d.
struct GnnGroups {
  std::size_t f1;
  std::size_t f2;
  std::size_t f3;
};

/// Max-aggregation message passing over in-edges:
///   r_v = relu(f1(z_v))
///   m_v = max_{(u,v) in E} relu(f2([r_v || r_u || s_(u,v)]))   (zero if no in-edges)
///   h_v = f3([r_v || m_v])
/// z_nodes is num_nodes x 2d, s_edges num_edges x d. Returns num_nodes x d.
Var gnn_process(Tape& tape, const GraphBatch& batch, Var z_nodes, Var s_edges,
                const GnnGroups& groups);

/// query: 4d -> d, key/value: 4d -> d, node: 3d -> d, edge: 6d -> d.
struct RtGroups {
  std::size_t query;
  std::size_t key;
  std::size_t value;
  std::size_t node;
  std::size_t edge;
};

struct RtResult {
  Var nodes;      // num_nodes x d
  Var edges;      // num_edges x d
  Var attention;  // num_edges x 1, weight of edge (v,u) in v's pool
};

/// Relational attention with edge states, for v and each u in N(v):
///   q_v    = query([z_v || mean_u z_(v,u)])
///   k_vu   = key([z_u || z_(v,u)]),  value likewise
///   h_v    = node([z_v || sum_u softmax_u(q_v . k_vu / sqrt(d)) value_vu])
///   h_(u,v) = edge([h_u || h_v || z_(u,v) || z_(v,u)])
/// Nodes without neighbors pool to zero; a missing reverse edge reads as zero.
RtResult rt_process(Tape& tape, const GraphBatch& batch, Var z_nodes, Var z_edges,
                    const RtGroups& groups);

/// As rt_process, but keys, values and the edge update read the updated
/// context states (c_u, c_(v,u)) in place of z. Queries still come from z.
RtResult cef_rt_process(Tape& tape, const GraphBatch& batch, Var z_nodes, Var z_edges,
                        Var context_nodes, Var context_edges, const RtGroups& groups);

}  // namespace cef
