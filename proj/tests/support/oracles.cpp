// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>

namespace cef::testing {

namespace {

int source_of(const Trace& t) {
  const auto& s = t.inputs.real.at("s");
  return static_cast<int>(std::find(s.begin(), s.end(), 1.0) - s.begin());
}

std::size_t at(int u, int v, int n) {
  return static_cast<std::size_t>(u) * static_cast<std::size_t>(n) + static_cast<std::size_t>(v);
}

}  // namespace

std::vector<std::vector<int>> hop_distances(const Graph& g) {
  const int n = g.n();
  const int inf = std::numeric_limits<int>::max() / 4;
  std::vector<std::vector<int>> d(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), inf));
  for (int v = 0; v < n; ++v) {
    d[v][v] = 0;
  }
  for (const Edge& e : g.edges()) {
    d[e.src][e.dst] = 1;
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
      }
    }
  }
  for (auto& row : d) {
    for (int& x : row) {
      x = x >= inf ? -1 : x;
    }
  }
  return d;
}

std::vector<double> dijkstra(const Graph& g, const std::vector<double>& w, int source) {
  const int n = g.n();
  std::vector<double> dist(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) {
      continue;
    }
    for (int v : g.neighbors(u)) {
      const double nd = d + w[at(u, v, n)];
      if (nd < dist[v]) {
        dist[v] = nd;
        heap.push({nd, v});
      }
    }
  }
  return dist;
}

double kruskal_weight(const Graph& g, const std::vector<double>& w) {
  const int n = g.n();
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  std::vector<Edge> edges;
  for (const Edge& e : g.edges()) {
    if (e.src < e.dst) {
      edges.push_back(e);
    }
  }
  std::sort(edges.begin(), edges.end(), [&](const Edge& a, const Edge& b) {
    return w[at(a.src, a.dst, n)] < w[at(b.src, b.dst, n)];
  });
  double total = 0.0;
  for (const Edge& e : edges) {
    const int a = find(e.src);
    const int b = find(e.dst);
    if (a != b) {
      parent[a] = b;
      total += w[at(e.src, e.dst, n)];
    }
  }
  return total;
}

std::string check_bfs(const Trace& t) {
  const int n = t.graph.n();
  const int s = source_of(t);
  const auto dist = hop_distances(t.graph);
  const auto& pi = t.outputs.index.at("pi");
  for (int v = 0; v < n; ++v) {
    const int d = dist[s][v];
    if (d < 0) {
      if (pi[v] != v) {
        return "unreached node " + std::to_string(v) + " has a parent";
      }
      continue;
    }
    // Walking parents must take exactly d hops over real edges.
    int u = v;
    int hops = 0;
    while (u != s && hops <= n) {
      const int p = pi[u];
      if (!t.graph.has_edge(p, u)) {
        return "parent of " + std::to_string(u) + " is not adjacent";
      }
      u = p;
      ++hops;
    }
    if (u != s || hops != d) {
      return "node " + std::to_string(v) + ": tree depth " + std::to_string(hops) +
             " != distance " + std::to_string(d);
    }
  }
  return {};
}

std::string check_bellman_ford(const Trace& t) {
  const int n = t.graph.n();
  const int s = source_of(t);
  const auto& w = t.inputs.real.at("w");
  const auto ref = dijkstra(t.graph, w, s);
  const auto& d = t.hints.back().real.at("d");
  const auto& pi = t.outputs.index.at("pi");
  for (int v = 0; v < n; ++v) {
    if (std::abs(d[v] - ref[v]) > 1e-9) {
      return "distance of " + std::to_string(v) + " differs from Dijkstra";
    }
    if (v == s) {
      if (pi[v] != s) {
        return "source is not its own predecessor";
      }
      continue;
    }
    const int p = pi[v];
    if (!t.graph.has_edge(p, v) || std::abs(ref[p] + w[at(p, v, n)] - ref[v]) > 1e-9) {
      return "predecessor of " + std::to_string(v) + " is not on a shortest path";
    }
  }
  return {};
}

std::string check_insertion_sort(const Trace& t) {
  const auto& key = t.inputs.real.at("key");
  const int n = static_cast<int>(key.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return key[a] < key[b]; });
  const auto& pred = t.outputs.index.at("pred");
  for (int i = 0; i < n; ++i) {
    const int expected = i == 0 ? order[0] : order[i - 1];
    if (pred[order[i]] != expected) {
      return "chain disagrees with the sorted order at rank " + std::to_string(i);
    }
  }
  return {};
}

std::string check_minimum(const Trace& t) {
  const auto& key = t.inputs.real.at("key");
  const int best = static_cast<int>(std::min_element(key.begin(), key.end()) - key.begin());
  for (int v : t.outputs.index.at("min")) {
    if (v != best) {
      return "output " + std::to_string(v) + " != argmin " + std::to_string(best);
    }
  }
  return {};
}

std::string check_binary_search(const Trace& t) {
  const auto& key = t.inputs.real.at("key");
  const double target = t.inputs.real.at("target").front();
  int expected = static_cast<int>(key.size()) - 1;
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (key[i] >= target) {
      expected = static_cast<int>(i);
      break;
    }
  }
  for (int v : t.outputs.index.at("return")) {
    if (v != expected) {
      return "position " + std::to_string(v) + " != scan " + std::to_string(expected);
    }
  }
  return {};
}

std::string check_mst_prim(const Trace& t) {
  const int n = t.graph.n();
  const auto& w = t.inputs.real.at("w");
  const auto& pi = t.outputs.index.at("pi");
  double total = 0.0;
  int roots = 0;
  for (int v = 0; v < n; ++v) {
    if (pi[v] == v) {
      ++roots;
      continue;
    }
    if (!t.graph.has_edge(pi[v], v)) {
      return "tree edge into " + std::to_string(v) + " is not a graph edge";
    }
    total += w[at(pi[v], v, n)];
  }
  if (roots != 1) {
    return "tree has " + std::to_string(roots) + " roots";
  }
  if (std::abs(total - kruskal_weight(t.graph, w)) > 1e-9) {
    return "tree weight differs from Kruskal";
  }
  return {};
}

std::string check_against_oracle(const Trace& t) {
  if (t.task == "bfs") return check_bfs(t);
  if (t.task == "bellman_ford") return check_bellman_ford(t);
  if (t.task == "insertion_sort") return check_insertion_sort(t);
  if (t.task == "minimum") return check_minimum(t);
  if (t.task == "binary_search") return check_binary_search(t);
  if (t.task == "mst_prim") return check_mst_prim(t);
  return "unknown task " + t.task;
}

}  // namespace cef::testing
