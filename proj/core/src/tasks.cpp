// SPDX-License-Identifier: Apache-2.0
#include "cef/tasks.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "cef/numerics.hpp"

namespace cef {

std::string_view to_string(TaskId id) {
  switch (id) {
    case TaskId::Bfs: return "bfs";
    case TaskId::BellmanFord: return "bellman_ford";
    case TaskId::InsertionSort: return "insertion_sort";
    case TaskId::Minimum: return "minimum";
    case TaskId::BinarySearch: return "binary_search";
    case TaskId::MstPrim: return "mst_prim";
  }
  return "?";
}

std::optional<TaskId> parse_task(std::string_view name) {
  for (TaskId id : kAllTasks) {
    if (to_string(id) == name) {
      return id;
    }
  }
  return std::nullopt;
}

namespace {

ProbeSpec probe(std::string name, Stage s, Location l, ProbeKind k) {
  return ProbeSpec{std::move(name), s, l, k};
}

constexpr auto kIn = Stage::Input;
constexpr auto kHint = Stage::Hint;
constexpr auto kOut = Stage::Output;
constexpr auto kNode = Location::Node;
constexpr auto kEdge = Location::Edge;
constexpr auto kScalar = ProbeKind::Scalar;
constexpr auto kMask = ProbeKind::Mask;
constexpr auto kIndex = ProbeKind::NodeIndex;

std::vector<TaskSpec> build_specs() {
  std::vector<TaskSpec> specs;
  specs.push_back({TaskId::Bfs,
                   {probe("pos", kIn, kNode, kScalar), probe("s", kIn, kNode, kMask),
                    probe("reach", kHint, kNode, kMask), probe("pi_h", kHint, kNode, kIndex),
                    probe("pi", kOut, kNode, kIndex)},
                   {}});
  specs.push_back({TaskId::BellmanFord,
                   {probe("pos", kIn, kNode, kScalar), probe("s", kIn, kNode, kMask),
                    probe("w", kIn, kEdge, kScalar), probe("d", kHint, kNode, kScalar),
                    probe("pi_h", kHint, kNode, kIndex), probe("pi", kOut, kNode, kIndex)},
                   {}});
  specs.push_back({TaskId::InsertionSort,
                   {probe("pos", kIn, kNode, kScalar), probe("key", kIn, kNode, kScalar),
                    probe("pred_h", kHint, kNode, kIndex), probe("i", kHint, kNode, kMask),
                    probe("pred", kOut, kNode, kIndex)},
                   {}});
  specs.push_back({TaskId::Minimum,
                   {probe("pos", kIn, kNode, kScalar), probe("key", kIn, kNode, kScalar),
                    probe("min_h", kHint, kNode, kIndex), probe("min", kOut, kNode, kIndex)},
                   {}});
  specs.push_back({TaskId::BinarySearch,
                   {probe("pos", kIn, kNode, kScalar), probe("key", kIn, kNode, kScalar),
                    probe("target", kIn, kNode, kScalar), probe("low", kHint, kNode, kMask),
                    probe("high", kHint, kNode, kMask), probe("mid", kHint, kNode, kIndex),
                    probe("return", kOut, kNode, kIndex)},
                   {}});
  specs.push_back({TaskId::MstPrim,
                   {probe("pos", kIn, kNode, kScalar), probe("s", kIn, kNode, kMask),
                    probe("w", kIn, kEdge, kScalar), probe("in_tree", kHint, kNode, kMask),
                    probe("pi_h", kHint, kNode, kIndex), probe("pi", kOut, kNode, kIndex)},
                   {}});
  return specs;
}

std::vector<double> positions(int n) {
  std::vector<double> pos(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    pos[static_cast<std::size_t>(i)] = static_cast<double>(i) / n;
  }
  return pos;
}

std::vector<double> one_hot(int n, int at) {
  std::vector<double> v(static_cast<std::size_t>(n), 0.0);
  v[static_cast<std::size_t>(at)] = 1.0;
  return v;
}

std::vector<int> identity(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

Trace make_trace(TaskId id, Graph g) {
  Trace t;
  t.task = std::string(to_string(id));
  t.specs = task_spec(id).probes;
  t.graph = std::move(g);
  return t;
}

void check_source(const Graph& g, int source) {
  if (source < 0 || source >= g.n()) {
    throw DomainError("source " + std::to_string(source) + " outside [0, " +
                      std::to_string(g.n()) + ")");
  }
}

void check_weights(const Graph& g, std::span<const double> w) {
  const auto n = static_cast<std::size_t>(g.n());
  if (w.size() != n * n) {
    throw ShapeError("edge weights must be a dense n x n matrix");
  }
  for (const auto& e : g.edges()) {
    const double x = w[static_cast<std::size_t>(e.src) * n + static_cast<std::size_t>(e.dst)];
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw DomainError("edge weights must be positive and finite");
    }
  }
}

std::vector<double> masked_weights(const Graph& g, std::span<const double> w, double scale) {
  const auto n = static_cast<std::size_t>(g.n());
  std::vector<double> out(n * n, 0.0);
  for (const auto& e : g.edges()) {
    const std::size_t k = static_cast<std::size_t>(e.src) * n + static_cast<std::size_t>(e.dst);
    out[k] = w[k] / scale;
  }
  return out;
}

double max_edge_weight(const Graph& g, std::span<const double> w) {
  const auto n = static_cast<std::size_t>(g.n());
  double m = 0.0;
  for (const auto& e : g.edges()) {
    m = std::max(m, w[static_cast<std::size_t>(e.src) * n + static_cast<std::size_t>(e.dst)]);
  }
  return m > 0.0 ? m : 1.0;
}

void require_distinct(std::span<const double> keys) {
  std::vector<double> sorted(keys.begin(), keys.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw DomainError("keys must be distinct");
  }
}

/// Min-max scaling to [0, 1]; a single value maps to 0.
std::vector<double> normalize(std::span<const double> x, double lo, double hi) {
  std::vector<double> out(x.size());
  const double range = hi - lo;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = range > 0.0 ? (x[i] - lo) / range : 0.0;
  }
  return out;
}

}  // namespace

const TaskSpec& task_spec(TaskId id) {
  static const std::vector<TaskSpec> specs = build_specs();
  return specs[static_cast<std::size_t>(id)];
}

Trace gen_bfs(const Graph& g, int source) {
  check_source(g, source);
  const int n = g.n();
  Trace t = make_trace(TaskId::Bfs, g);
  t.inputs.real["pos"] = positions(n);
  t.inputs.real["s"] = one_hot(n, source);

  std::vector<double> reach = one_hot(n, source);
  std::vector<int> parent = identity(n);
  for (;;) {
    const std::vector<double> prev = reach;
    bool changed = false;
    for (int v = 0; v < n; ++v) {
      if (prev[static_cast<std::size_t>(v)] != 0.0) {
        continue;
      }
      // Smallest-index reached neighbor becomes the parent.
      for (int u = 0; u < n; ++u) {
        if (prev[static_cast<std::size_t>(u)] != 0.0 && g.has_edge(u, v)) {
          parent[static_cast<std::size_t>(v)] = u;
          reach[static_cast<std::size_t>(v)] = 1.0;
          changed = true;
          break;
        }
      }
    }
    if (!changed) {
      break;
    }
    FeatureBundle h;
    h.real["reach"] = reach;
    h.index["pi_h"] = parent;
    t.hints.push_back(std::move(h));
  }
  if (t.hints.empty()) {
    FeatureBundle h;
    h.real["reach"] = reach;
    h.index["pi_h"] = parent;
    t.hints.push_back(std::move(h));
  }
  t.outputs.index["pi"] = parent;
  t.T = static_cast<int>(t.hints.size());
  return t;
}

Trace gen_bellman_ford(const Graph& g, std::span<const double> weights, int source) {
  check_source(g, source);
  check_weights(g, weights);
  const int n = g.n();
  const auto un = static_cast<std::size_t>(n);
  const auto labels = component_labels(g);
  for (int v = 0; v < n; ++v) {
    if (labels[static_cast<std::size_t>(v)] != labels[static_cast<std::size_t>(source)]) {
      throw DomainError("bellman_ford: node " + std::to_string(v) + " unreachable from source");
    }
  }
  const double scale = std::max(1, n - 1) * max_edge_weight(g, weights);

  Trace t = make_trace(TaskId::BellmanFord, g);
  t.inputs.real["pos"] = positions(n);
  t.inputs.real["s"] = one_hot(n, source);
  t.inputs.real["w"] = masked_weights(g, weights, scale);

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(un, kInf);
  dist[static_cast<std::size_t>(source)] = 0.0;
  std::vector<int> pred = identity(n);
  auto record = [&] {
    FeatureBundle h;
    std::vector<double> d(un, 0.0);
    for (std::size_t v = 0; v < un; ++v) {
      d[v] = std::isfinite(dist[v]) ? dist[v] / scale : 0.0;
    }
    h.real["d"] = std::move(d);
    h.index["pi_h"] = pred;
    t.hints.push_back(std::move(h));
  };
  for (int round = 0; round < n; ++round) {
    std::vector<double> next = dist;
    std::vector<int> next_pred = pred;
    for (int v = 0; v < n; ++v) {
      for (int u = 0; u < n; ++u) {
        if (!g.has_edge(u, v) || !std::isfinite(dist[static_cast<std::size_t>(u)])) {
          continue;
        }
        const double cand = dist[static_cast<std::size_t>(u)] + weights[static_cast<std::size_t>(u) * un + static_cast<std::size_t>(v)];
        if (cand < next[static_cast<std::size_t>(v)]) {
          next[static_cast<std::size_t>(v)] = cand;
          next_pred[static_cast<std::size_t>(v)] = u;
        }
      }
    }
    if (next == dist && next_pred == pred) {
      break;
    }
    dist = std::move(next);
    pred = std::move(next_pred);
    record();
  }
  if (t.hints.empty()) {
    record();
  }
  t.outputs.index["pi"] = pred;
  t.T = static_cast<int>(t.hints.size());
  return t;
}

Trace gen_insertion_sort(std::span<const double> keys) {
  if (keys.empty()) {
    throw DomainError("insertion_sort: need at least one key");
  }
  require_distinct(keys);
  const int n = static_cast<int>(keys.size());
  Trace t = make_trace(TaskId::InsertionSort, complete_graph(n));
  const auto [lo, hi] = std::minmax_element(keys.begin(), keys.end());
  t.inputs.real["pos"] = positions(n);
  t.inputs.real["key"] = normalize(keys, *lo, *hi);

  std::vector<int> order{0};
  auto chain = [&] {
    std::vector<int> pred = identity(n);
    for (std::size_t i = 1; i < order.size(); ++i) {
      pred[static_cast<std::size_t>(order[i])] = order[i - 1];
    }
    return pred;
  };
  for (int j = 1; j < n; ++j) {
    auto at = order.begin();
    while (at != order.end() && keys[static_cast<std::size_t>(*at)] < keys[static_cast<std::size_t>(j)]) {
      ++at;
    }
    order.insert(at, j);
    FeatureBundle h;
    h.index["pred_h"] = chain();
    h.real["i"] = one_hot(n, j);
    t.hints.push_back(std::move(h));
  }
  if (t.hints.empty()) {
    FeatureBundle h;
    h.index["pred_h"] = chain();
    h.real["i"] = one_hot(n, 0);
    t.hints.push_back(std::move(h));
  }
  t.outputs.index["pred"] = chain();
  t.T = static_cast<int>(t.hints.size());
  return t;
}

Trace gen_minimum(std::span<const double> keys) {
  if (keys.empty()) {
    throw DomainError("minimum: need at least one key");
  }
  require_distinct(keys);
  const int n = static_cast<int>(keys.size());
  Trace t = make_trace(TaskId::Minimum, complete_graph(n));
  const auto [lo, hi] = std::minmax_element(keys.begin(), keys.end());
  t.inputs.real["pos"] = positions(n);
  t.inputs.real["key"] = normalize(keys, *lo, *hi);

  int best = 0;
  for (int i = 0; i < n; ++i) {
    if (keys[static_cast<std::size_t>(i)] < keys[static_cast<std::size_t>(best)]) {
      best = i;
    }
    FeatureBundle h;
    h.index["min_h"] = std::vector<int>(static_cast<std::size_t>(n), best);
    t.hints.push_back(std::move(h));
  }
  t.outputs.index["min"] = std::vector<int>(static_cast<std::size_t>(n), best);
  t.T = n;
  return t;
}

Trace gen_binary_search(std::span<const double> sorted_keys, double target) {
  if (sorted_keys.empty()) {
    throw DomainError("binary_search: need at least one key");
  }
  for (std::size_t i = 1; i < sorted_keys.size(); ++i) {
    if (!(sorted_keys[i - 1] < sorted_keys[i])) {
      throw DomainError("binary_search: keys must be strictly increasing");
    }
  }
  if (target < sorted_keys.front() || target > sorted_keys.back()) {
    throw DomainError("binary_search: target outside key range");
  }
  const int n = static_cast<int>(sorted_keys.size());
  Trace t = make_trace(TaskId::BinarySearch, complete_graph(n));
  const double lo_key = sorted_keys.front();
  const double hi_key = sorted_keys.back();
  t.inputs.real["pos"] = positions(n);
  t.inputs.real["key"] = normalize(sorted_keys, lo_key, hi_key);
  const double tnorm = normalize(std::span<const double>(&target, 1), lo_key, hi_key)[0];
  t.inputs.real["target"] = std::vector<double>(static_cast<std::size_t>(n), tnorm);

  int lo = 0;
  int hi = n - 1;
  auto record = [&](int mid) {
    FeatureBundle h;
    h.real["low"] = one_hot(n, lo);
    h.real["high"] = one_hot(n, hi);
    h.index["mid"] = std::vector<int>(static_cast<std::size_t>(n), mid);
    t.hints.push_back(std::move(h));
  };
  while (lo < hi) {
    const int mid = lo + (hi - lo) / 2;
    if (sorted_keys[static_cast<std::size_t>(mid)] < target) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
    record(mid);
  }
  if (t.hints.empty()) {
    record(lo);
  }
  t.outputs.index["return"] = std::vector<int>(static_cast<std::size_t>(n), lo);
  t.T = static_cast<int>(t.hints.size());
  return t;
}

Trace gen_mst_prim(const Graph& g, std::span<const double> weights, int source) {
  check_source(g, source);
  check_weights(g, weights);
  if (!g.is_symmetric()) {
    throw DomainError("mst_prim: graph must be undirected");
  }
  const int n = g.n();
  const auto un = static_cast<std::size_t>(n);
  const auto labels = component_labels(g);
  if (std::any_of(labels.begin(), labels.end(), [](int l) { return l != 0; })) {
    throw DomainError("mst_prim: graph is disconnected");
  }
  std::vector<double> seen;
  for (const auto& e : g.edges()) {
    const double a = weights[static_cast<std::size_t>(e.src) * un + static_cast<std::size_t>(e.dst)];
    const double b = weights[static_cast<std::size_t>(e.dst) * un + static_cast<std::size_t>(e.src)];
    if (a != b) {
      throw DomainError("mst_prim: weights must be symmetric");
    }
    if (e.src < e.dst) {
      seen.push_back(a);
    }
  }
  require_distinct(seen);

  Trace t = make_trace(TaskId::MstPrim, g);
  t.inputs.real["pos"] = positions(n);
  t.inputs.real["s"] = one_hot(n, source);
  t.inputs.real["w"] = masked_weights(g, weights, max_edge_weight(g, weights));

  std::vector<double> in_tree = one_hot(n, source);
  std::vector<int> parent = identity(n);
  auto record = [&] {
    FeatureBundle h;
    h.real["in_tree"] = in_tree;
    h.index["pi_h"] = parent;
    t.hints.push_back(std::move(h));
  };
  for (int step = 1; step < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    int best_u = -1;
    int best_v = -1;
    for (const auto& e : g.edges()) {
      if (in_tree[static_cast<std::size_t>(e.src)] != 0.0 &&
          in_tree[static_cast<std::size_t>(e.dst)] == 0.0) {
        const double w = weights[static_cast<std::size_t>(e.src) * un + static_cast<std::size_t>(e.dst)];
        if (w < best) {
          best = w;
          best_u = e.src;
          best_v = e.dst;
        }
      }
    }
    parent[static_cast<std::size_t>(best_v)] = best_u;
    in_tree[static_cast<std::size_t>(best_v)] = 1.0;
    record();
  }
  if (t.hints.empty()) {
    record();
  }
  t.outputs.index["pi"] = parent;
  t.T = static_cast<int>(t.hints.size());
  return t;
}

Graph connected_random_graph(int n, double p, Rng& rng) {
  const Graph base = random_graph(n, p, rng.next(), /*undirected=*/true);
  const auto labels = component_labels(base);
  const int count = n == 0 ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  if (count <= 1) {
    return base;
  }
  std::vector<std::vector<int>> members(static_cast<std::size_t>(count));
  for (int v = 0; v < n; ++v) {
    members[static_cast<std::size_t>(labels[static_cast<std::size_t>(v)])].push_back(v);
  }
  std::vector<Edge> edges = base.edges();
  std::vector<int> joined = members[0];
  for (int c = 1; c < count; ++c) {
    const auto& m = members[static_cast<std::size_t>(c)];
    const int a = m[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(m.size()) - 1))];
    const int b = joined[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(joined.size()) - 1))];
    edges.push_back({a, b});
    edges.push_back({b, a});
    joined.insert(joined.end(), m.begin(), m.end());
  }
  return Graph::from_edges(n, std::move(edges));
}

namespace {

std::vector<double> sample_weights(const Graph& g, Rng& rng, const SamplerParams& p) {
  const auto n = static_cast<std::size_t>(g.n());
  std::vector<double> w(n * n, 0.0);
  for (const auto& e : g.edges()) {
    if (e.src < e.dst) {
      const double x = rng.uniform(p.weight_min, p.weight_max);
      w[static_cast<std::size_t>(e.src) * n + static_cast<std::size_t>(e.dst)] = x;
      w[static_cast<std::size_t>(e.dst) * n + static_cast<std::size_t>(e.src)] = x;
    }
  }
  return w;
}

std::vector<double> sample_distinct_keys(int n, Rng& rng) {
  for (;;) {
    std::vector<double> keys(static_cast<std::size_t>(n));
    for (auto& k : keys) {
      k = rng.uniform();
    }
    std::vector<double> sorted = keys;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end()) {
      return keys;
    }
  }
}

}  // namespace

Trace sample_trace(TaskId id, int n, Rng& rng, const SamplerParams& params) {
  if (n < 1) {
    throw DomainError("sample_trace: n must be >= 1");
  }
  switch (id) {
    case TaskId::Bfs: {
      const Graph g = random_graph(n, params.edge_probability, rng.next(), true);
      return gen_bfs(g, rng.uniform_int(0, n - 1));
    }
    case TaskId::BellmanFord: {
      const Graph g = connected_random_graph(n, params.edge_probability, rng);
      const auto w = sample_weights(g, rng, params);
      return gen_bellman_ford(g, w, rng.uniform_int(0, n - 1));
    }
    case TaskId::InsertionSort:
      return gen_insertion_sort(sample_distinct_keys(n, rng));
    case TaskId::Minimum:
      return gen_minimum(sample_distinct_keys(n, rng));
    case TaskId::BinarySearch: {
      auto keys = sample_distinct_keys(n, rng);
      std::sort(keys.begin(), keys.end());
      const double target = rng.uniform(keys.front(), keys.back());
      return gen_binary_search(keys, target);
    }
    case TaskId::MstPrim: {
      const Graph g = connected_random_graph(n, params.edge_probability, rng);
      for (;;) {
        const auto w = sample_weights(g, rng, params);
        try {
          return gen_mst_prim(g, w, rng.uniform_int(0, n - 1));
        } catch (const DomainError&) {
          // Repeated weight; draw again.
        }
      }
    }
  }
  throw ContractError("sample_trace: unknown task");
}

Trace sample_trace(TaskId id, Rng& rng, const SamplerParams& params) {
  if (params.n_min < 1 || params.n_max < params.n_min) {
    throw DomainError("sample_trace: bad size range");
  }
  return sample_trace(id, rng.uniform_int(params.n_min, params.n_max), rng, params);
}

}  // namespace cef
