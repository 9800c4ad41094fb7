// SPDX-License-Identifier: Apache-2.0
#include "cef/trace.hpp"

#include <cmath>

namespace cef {

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Input: return "input";
    case Stage::Hint: return "hint";
    case Stage::Output: return "output";
  }
  return "?";
}

std::string_view to_string(Location l) { return l == Location::Node ? "node" : "edge"; }

std::string_view to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::Scalar: return "scalar";
    case ProbeKind::Mask: return "mask";
    case ProbeKind::NodeIndex: return "node_index";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view s) {
  if (s == "input") return Stage::Input;
  if (s == "hint") return Stage::Hint;
  if (s == "output") return Stage::Output;
  return std::nullopt;
}

std::optional<Location> parse_location(std::string_view s) {
  if (s == "node") return Location::Node;
  if (s == "edge") return Location::Edge;
  return std::nullopt;
}

std::optional<ProbeKind> parse_kind(std::string_view s) {
  if (s == "scalar") return ProbeKind::Scalar;
  if (s == "mask") return ProbeKind::Mask;
  if (s == "node_index") return ProbeKind::NodeIndex;
  return std::nullopt;
}

const ProbeSpec* Trace::find_spec(std::string_view name) const {
  for (const auto& s : specs) {
    if (s.name == name) {
      return &s;
    }
  }
  return nullptr;
}

namespace {

void check_bundle(const Trace& trace, const FeatureBundle& bundle, Stage stage,
                  const std::string& where, std::vector<std::string>& out) {
  const int n = trace.graph.n();
  const auto node_len = static_cast<std::size_t>(n);
  const auto edge_len = node_len * node_len;

  for (const auto& spec : trace.specs) {
    if (spec.stage != stage) {
      continue;
    }
    const std::string tag = where + " probe '" + spec.name + "'";
    if (spec.kind == ProbeKind::NodeIndex) {
      auto it = bundle.index.find(spec.name);
      if (it == bundle.index.end()) {
        out.push_back(tag + ": missing");
        continue;
      }
      if (it->second.size() != node_len) {
        out.push_back(tag + ": expected " + std::to_string(node_len) + " values, got " +
                      std::to_string(it->second.size()));
        continue;
      }
      for (std::size_t i = 0; i < it->second.size(); ++i) {
        const int v = it->second[i];
        if (v < 0 || v >= n) {
          out.push_back(tag + ": node index " + std::to_string(v) + " at position " +
                        std::to_string(i) + " outside [0, " + std::to_string(n) + ")");
        }
      }
      continue;
    }
    auto it = bundle.real.find(spec.name);
    if (it == bundle.real.end()) {
      out.push_back(tag + ": missing");
      continue;
    }
    const std::size_t want = spec.location == Location::Node ? node_len : edge_len;
    if (it->second.size() != want) {
      out.push_back(tag + ": expected " + std::to_string(want) + " values, got " +
                    std::to_string(it->second.size()));
      continue;
    }
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      const double v = it->second[i];
      if (!std::isfinite(v)) {
        out.push_back(tag + ": non-finite value at position " + std::to_string(i));
      } else if (spec.kind == ProbeKind::Mask && v != 0.0 && v != 1.0) {
        out.push_back(tag + ": mask value " + std::to_string(v) + " at position " +
                      std::to_string(i) + " is not 0/1");
      }
    }
  }

  auto known = [&](const std::string& name, bool is_index) {
    const ProbeSpec* s = trace.find_spec(name);
    return s != nullptr && s->stage == stage && (s->kind == ProbeKind::NodeIndex) == is_index;
  };
  for (const auto& [name, _] : bundle.real) {
    if (!known(name, false)) {
      out.push_back(where + ": field '" + name + "' has no matching probe spec");
    }
  }
  for (const auto& [name, _] : bundle.index) {
    if (!known(name, true)) {
      out.push_back(where + ": field '" + name + "' has no matching probe spec");
    }
  }
}

}  // namespace

std::vector<std::string> validate_trace(const Trace& trace) {
  std::vector<std::string> out;
  const Graph& g = trace.graph;
  if (g.n() < 1) {
    out.push_back("graph has no nodes");
    return out;
  }
  std::size_t live = 0;
  for (auto a : g.adjacency()) {
    live += a;
  }
  if (live != g.edges().size()) {
    out.push_back("adjacency disagrees with edge list");
  }
  for (const auto& e : g.edges()) {
    if (e.src == e.dst) {
      out.push_back("self-loop at node " + std::to_string(e.src));
    }
  }

  for (std::size_t i = 0; i < trace.specs.size(); ++i) {
    const auto& s = trace.specs[i];
    if (s.kind == ProbeKind::NodeIndex && s.location != Location::Node) {
      out.push_back("probe '" + s.name + "': node_index probes must live on nodes");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (trace.specs[j].name == s.name) {
        out.push_back("probe '" + s.name + "' declared twice");
      }
    }
  }

  if (trace.T < 1) {
    out.push_back("T = " + std::to_string(trace.T) + " must be >= 1");
  }
  if (static_cast<int>(trace.hints.size()) != trace.T) {
    out.push_back("T = " + std::to_string(trace.T) + " but " + std::to_string(trace.hints.size()) +
                  " hint bundles");
  }

  check_bundle(trace, trace.inputs, Stage::Input, "inputs", out);
  for (std::size_t t = 0; t < trace.hints.size(); ++t) {
    check_bundle(trace, trace.hints[t], Stage::Hint, "hints[" + std::to_string(t) + "]", out);
  }
  check_bundle(trace, trace.outputs, Stage::Output, "outputs", out);
  return out;
}

}  // namespace cef
