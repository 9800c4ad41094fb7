// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace cef {

/// Directed edge (source, target).
struct Edge {
  int src = 0;
  int dst = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Simple directed graph without self-loops. Undirected graphs store both
/// directions. Edges are kept in lexicographic order.
class Graph {
 public:
  Graph() = default;
  /// Validates and canonicalizes; throws DomainError on n < 1, self-loops,
  /// out-of-range endpoints or duplicates.
  static Graph from_edges(int n, std::vector<Edge> edges);

  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] int edge_count() const { return static_cast<int>(edges_.size()); }
  [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }
  [[nodiscard]] bool has_edge(int u, int v) const {
    return adjacency_[static_cast<std::size_t>(u) * static_cast<std::size_t>(n_) +
                      static_cast<std::size_t>(v)] != 0;
  }
  /// N(v) = { u : (v, u) in E }.
  [[nodiscard]] const std::vector<int>& neighbors(int v) const {
    return out_[static_cast<std::size_t>(v)];
  }
  [[nodiscard]] bool is_symmetric() const;
  /// Row-major n x n 0/1 matrix.
  [[nodiscard]] const std::vector<std::uint8_t>& adjacency() const { return adjacency_; }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_;
  }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::uint8_t> adjacency_;
  std::vector<std::vector<int>> out_;
};

/// Erdos-Renyi sample: each unordered (undirected) or ordered (directed) pair
/// is present with probability p. Deterministic per seed.
Graph random_graph(int n, double p, std::uint64_t seed, bool undirected);
/// All ordered pairs u != v.
Graph complete_graph(int n);
/// Connected components of the undirected view.
std::vector<int> component_labels(const Graph& g);

}  // namespace cef
