// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "cef/graph.hpp"
#include "cef/trace.hpp"

namespace cef {

/// Disjoint union of graphs with global node and edge numbering.
///
/// Node-index probes are scored over candidate pairs (owner v, target u) for
/// every u in v's graph, u == v included. Pairs are stored grouped by owner,
/// so the owner's global id doubles as the pair's segment id.
struct GraphBatch {
  int num_graphs = 0;
  int num_nodes = 0;
  int num_edges = 0;
  int num_pairs = 0;

  std::vector<int> graph_n;      // nodes per graph
  std::vector<int> node_offset;  // first global node of each graph
  std::vector<int> edge_offset;  // first global edge of each graph
  std::vector<int> pair_offset;  // first pair of each graph
  std::vector<int> node_graph;   // graph of each node

  // Per global edge (src -> dst), in graph-then-lexicographic order.
  std::vector<int> src;
  std::vector<int> dst;
  std::vector<int> rev;  // edge dst -> src, or -1
  std::vector<int> edge_graph;

  // Per pair.
  std::vector<int> pair_owner;
  std::vector<int> pair_target;
  std::vector<int> pair_edge;  // edge target -> owner, or -1
  std::vector<int> pair_self;  // owner when target == owner, else -1

  static GraphBatch from_graphs(std::span<const Graph* const> graphs);

  /// Global id of edge (u, v) given local endpoints in graph g, or -1.
  [[nodiscard]] int edge_id(int g, int u, int v) const;
  /// Global pair id of (owner, target) given local ids in graph g.
  [[nodiscard]] int pair_id(int g, int owner, int target) const {
    return pair_offset[static_cast<std::size_t>(g)] + owner * graph_n[static_cast<std::size_t>(g)] +
           target;
  }

 private:
  std::vector<int> dense_offset_;
  std::vector<int> edge_lookup_;
};

/// Probe values for a whole batch. Node probes hold num_nodes values, edge
/// probes num_edges values, node-index probes one global node id per node.
struct BatchFeatures {
  std::map<std::string, std::vector<double>> real;
  std::map<std::string, std::vector<int>> index;
};

/// Packs the probes named in `specs` from one bundle per graph. Probes absent
/// from every bundle are skipped; partially present probes are an error.
BatchFeatures pack_features(const GraphBatch& batch, std::span<const ProbeSpec> specs,
                            std::span<const FeatureBundle* const> bundles);
/// Inverse of pack_features for graph g.
FeatureBundle unpack_features(const GraphBatch& batch, std::span<const ProbeSpec> specs,
                              const BatchFeatures& features, int g);

}  // namespace cef
