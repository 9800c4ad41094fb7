// SPDX-License-Identifier: Apache-2.0
#include "cef/batch.hpp"

#include "cef/numerics.hpp"

namespace cef {

GraphBatch GraphBatch::from_graphs(std::span<const Graph* const> graphs) {
  GraphBatch b;
  b.num_graphs = static_cast<int>(graphs.size());
  for (const Graph* gp : graphs) {
    const Graph& g = *gp;
    const int gi = static_cast<int>(b.graph_n.size());
    const int n = g.n();
    b.graph_n.push_back(n);
    b.node_offset.push_back(b.num_nodes);
    b.edge_offset.push_back(b.num_edges);
    b.pair_offset.push_back(b.num_pairs);
    b.dense_offset_.push_back(static_cast<int>(b.edge_lookup_.size()));
    b.edge_lookup_.resize(b.edge_lookup_.size() + static_cast<std::size_t>(n) * static_cast<std::size_t>(n), -1);
    for (int v = 0; v < n; ++v) {
      b.node_graph.push_back(gi);
    }
    for (const Edge& e : g.edges()) {
      b.edge_lookup_[static_cast<std::size_t>(b.dense_offset_.back() + e.src * n + e.dst)] =
          b.num_edges;
      b.src.push_back(b.num_nodes + e.src);
      b.dst.push_back(b.num_nodes + e.dst);
      b.edge_graph.push_back(gi);
      ++b.num_edges;
    }
    for (int owner = 0; owner < n; ++owner) {
      for (int target = 0; target < n; ++target) {
        b.pair_owner.push_back(b.num_nodes + owner);
        b.pair_target.push_back(b.num_nodes + target);
        b.pair_self.push_back(owner == target ? b.num_nodes + owner : -1);
        b.pair_edge.push_back(
            owner == target ? -1
                            : b.edge_lookup_[static_cast<std::size_t>(b.dense_offset_.back() + target * n + owner)]);
      }
    }
    b.num_pairs += n * n;
    b.num_nodes += n;
  }
  b.rev.resize(static_cast<std::size_t>(b.num_edges));
  for (int e = 0; e < b.num_edges; ++e) {
    const int g = b.edge_graph[static_cast<std::size_t>(e)];
    const int off = b.node_offset[static_cast<std::size_t>(g)];
    b.rev[static_cast<std::size_t>(e)] =
        b.edge_id(g, b.dst[static_cast<std::size_t>(e)] - off, b.src[static_cast<std::size_t>(e)] - off);
  }
  return b;
}

int GraphBatch::edge_id(int g, int u, int v) const {
  const int n = graph_n[static_cast<std::size_t>(g)];
  return edge_lookup_[static_cast<std::size_t>(dense_offset_[static_cast<std::size_t>(g)] + u * n + v)];
}

BatchFeatures pack_features(const GraphBatch& batch, std::span<const ProbeSpec> specs,
                            std::span<const FeatureBundle* const> bundles) {
  if (static_cast<int>(bundles.size()) != batch.num_graphs) {
    throw ShapeError("pack_features: one bundle per graph required");
  }
  BatchFeatures out;
  for (const ProbeSpec& spec : specs) {
    std::size_t present = 0;
    for (const FeatureBundle* b : bundles) {
      present += b->contains(spec.name) ? 1 : 0;
    }
    if (present == 0) {
      continue;
    }
    if (present != bundles.size()) {
      throw ContractError("pack_features: probe '" + spec.name + "' missing for some graphs");
    }
    if (spec.kind == ProbeKind::NodeIndex) {
      auto& dstv = out.index[spec.name];
      dstv.reserve(static_cast<std::size_t>(batch.num_nodes));
      for (int g = 0; g < batch.num_graphs; ++g) {
        const auto& v = bundles[static_cast<std::size_t>(g)]->index.at(spec.name);
        const int off = batch.node_offset[static_cast<std::size_t>(g)];
        if (static_cast<int>(v.size()) != batch.graph_n[static_cast<std::size_t>(g)]) {
          throw ShapeError("pack_features: probe '" + spec.name + "' has wrong length");
        }
        for (int x : v) {
          dstv.push_back(off + x);
        }
      }
      continue;
    }
    auto& dstv = out.real[spec.name];
    if (spec.location == Location::Node) {
      dstv.reserve(static_cast<std::size_t>(batch.num_nodes));
      for (int g = 0; g < batch.num_graphs; ++g) {
        const auto& v = bundles[static_cast<std::size_t>(g)]->real.at(spec.name);
        if (static_cast<int>(v.size()) != batch.graph_n[static_cast<std::size_t>(g)]) {
          throw ShapeError("pack_features: probe '" + spec.name + "' has wrong length");
        }
        dstv.insert(dstv.end(), v.begin(), v.end());
      }
    } else {
      dstv.resize(static_cast<std::size_t>(batch.num_edges));
      for (int e = 0; e < batch.num_edges; ++e) {
        const int g = batch.edge_graph[static_cast<std::size_t>(e)];
        const int n = batch.graph_n[static_cast<std::size_t>(g)];
        const int off = batch.node_offset[static_cast<std::size_t>(g)];
        const auto& v = bundles[static_cast<std::size_t>(g)]->real.at(spec.name);
        if (static_cast<int>(v.size()) != n * n) {
          throw ShapeError("pack_features: edge probe '" + spec.name + "' has wrong length");
        }
        const int u = batch.src[static_cast<std::size_t>(e)] - off;
        const int w = batch.dst[static_cast<std::size_t>(e)] - off;
        dstv[static_cast<std::size_t>(e)] = v[static_cast<std::size_t>(u * n + w)];
      }
    }
  }
  return out;
}

FeatureBundle unpack_features(const GraphBatch& batch, std::span<const ProbeSpec> specs,
                              const BatchFeatures& features, int g) {
  FeatureBundle out;
  const auto gi = static_cast<std::size_t>(g);
  const int n = batch.graph_n[gi];
  const int off = batch.node_offset[gi];
  for (const ProbeSpec& spec : specs) {
    if (spec.kind == ProbeKind::NodeIndex) {
      auto it = features.index.find(spec.name);
      if (it == features.index.end()) {
        continue;
      }
      std::vector<int> v(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        v[static_cast<std::size_t>(i)] = it->second[static_cast<std::size_t>(off + i)] - off;
      }
      out.index[spec.name] = std::move(v);
      continue;
    }
    auto it = features.real.find(spec.name);
    if (it == features.real.end()) {
      continue;
    }
    if (spec.location == Location::Node) {
      out.real[spec.name] = std::vector<double>(it->second.begin() + off, it->second.begin() + off + n);
    } else {
      std::vector<double> dense(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
      const int e0 = batch.edge_offset[gi];
      const int e1 = g + 1 < batch.num_graphs ? batch.edge_offset[gi + 1] : batch.num_edges;
      for (int e = e0; e < e1; ++e) {
        const int u = batch.src[static_cast<std::size_t>(e)] - off;
        const int w = batch.dst[static_cast<std::size_t>(e)] - off;
        dense[static_cast<std::size_t>(u * n + w)] = it->second[static_cast<std::size_t>(e)];
      }
      out.real[spec.name] = std::move(dense);
    }
  }
  return out;
}

}  // namespace cef
