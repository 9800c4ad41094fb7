// SPDX-License-Identifier: Apache-2.0
#include "cef/graph.hpp"

#include <algorithm>
#include <string>

#include "cef/numerics.hpp"
#include "cef/rng.hpp"

namespace cef {

Graph Graph::from_edges(int n, std::vector<Edge> edges) {
  if (n < 1) {
    throw DomainError("graph needs at least one node, got n = " + std::to_string(n));
  }
  std::sort(edges.begin(), edges.end());
  Graph g;
  g.n_ = n;
  g.adjacency_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
  g.out_.assign(static_cast<std::size_t>(n), {});
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge e = edges[i];
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) {
      throw DomainError("edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                        ") out of range for n = " + std::to_string(n));
    }
    if (e.src == e.dst) {
      throw DomainError("self-loop at node " + std::to_string(e.src));
    }
    if (i > 0 && edges[i - 1] == e) {
      throw DomainError("duplicate edge (" + std::to_string(e.src) + ", " +
                        std::to_string(e.dst) + ")");
    }
    g.adjacency_[static_cast<std::size_t>(e.src) * static_cast<std::size_t>(n) +
                 static_cast<std::size_t>(e.dst)] = 1;
    g.out_[static_cast<std::size_t>(e.src)].push_back(e.dst);
  }
  g.edges_ = std::move(edges);
  return g;
}

bool Graph::is_symmetric() const {
  return std::all_of(edges_.begin(), edges_.end(),
                     [this](const Edge& e) { return has_edge(e.dst, e.src); });
}

Graph random_graph(int n, double p, std::uint64_t seed, bool undirected) {
  if (n < 1) {
    throw DomainError("random_graph: n must be >= 1");
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError("random_graph: p must lie in [0, 1]");
  }
  Rng rng(seed);
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = undirected ? u + 1 : 0; v < n; ++v) {
      if (u == v || !rng.bernoulli(p)) {
        continue;
      }
      edges.push_back({u, v});
      if (undirected) {
        edges.push_back({v, u});
      }
    }
  }
  return Graph::from_edges(n, std::move(edges));
}

Graph complete_graph(int n) {
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      if (u != v) {
        edges.push_back({u, v});
      }
    }
  }
  return Graph::from_edges(n, std::move(edges));
}

std::vector<int> component_labels(const Graph& g) {
  std::vector<int> label(static_cast<std::size_t>(g.n()), -1);
  std::vector<std::vector<int>> undirected(static_cast<std::size_t>(g.n()));
  for (const Edge& e : g.edges()) {
    undirected[static_cast<std::size_t>(e.src)].push_back(e.dst);
    undirected[static_cast<std::size_t>(e.dst)].push_back(e.src);
  }
  int next = 0;
  std::vector<int> stack;
  for (int s = 0; s < g.n(); ++s) {
    if (label[static_cast<std::size_t>(s)] >= 0) {
      continue;
    }
    label[static_cast<std::size_t>(s)] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v : undirected[static_cast<std::size_t>(u)]) {
        if (label[static_cast<std::size_t>(v)] < 0) {
          label[static_cast<std::size_t>(v)] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return label;
}

}  // namespace cef
