// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cef/graph.hpp"

namespace cef {

enum class Stage { Input, Hint, Output };
enum class Location { Node, Edge };
enum class ProbeKind { Scalar, Mask, NodeIndex };

/// A named, typed feature channel.
struct ProbeSpec {
  std::string name;
  Stage stage = Stage::Input;
  Location location = Location::Node;
  ProbeKind kind = ProbeKind::Scalar;

  friend bool operator==(const ProbeSpec&, const ProbeSpec&) = default;
};

std::string_view to_string(Stage s);
std::string_view to_string(Location l);
std::string_view to_string(ProbeKind k);
std::optional<Stage> parse_stage(std::string_view s);
std::optional<Location> parse_location(std::string_view s);
std::optional<ProbeKind> parse_kind(std::string_view s);

/// Probe values for one graph at one stage/step.
///
/// Node probes hold n values. Edge probes hold a dense row-major n x n matrix;
/// only entries on graph edges are meaningful. Node-index probes hold one
/// target node per node.
struct FeatureBundle {
  std::map<std::string, std::vector<double>> real;
  std::map<std::string, std::vector<int>> index;

  [[nodiscard]] bool contains(const std::string& name) const {
    return real.contains(name) || index.contains(name);
  }
  friend bool operator==(const FeatureBundle&, const FeatureBundle&) = default;
};

struct Trace {
  std::string task;
  Graph graph;
  std::vector<ProbeSpec> specs;
  FeatureBundle inputs;
  std::vector<FeatureBundle> hints;  // hints[t - 1] is the ground truth of step t
  FeatureBundle outputs;
  int T = 0;

  [[nodiscard]] const ProbeSpec* find_spec(std::string_view name) const;
  friend bool operator==(const Trace&, const Trace&) = default;
};

/// Lists every structural problem in a trace; an empty result means valid.
std::vector<std::string> validate_trace(const Trace& trace);

}  // namespace cef
