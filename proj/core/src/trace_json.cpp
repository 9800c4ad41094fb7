// SPDX-License-Identifier: Apache-2.0
#include "cef/trace_json.hpp"

#include <fstream>
#include <sstream>

#include "cef/numerics.hpp"
#include "json.hpp"

namespace cef {

using nlohmann::json;

namespace {

json bundle_to_json(const FeatureBundle& b) {
  json j = json::object();
  for (const auto& [name, values] : b.real) {
    j[name] = values;
  }
  for (const auto& [name, values] : b.index) {
    j[name] = values;
  }
  return j;
}

FeatureBundle bundle_from_json(const json& j, const Trace& trace, Stage stage) {
  if (!j.is_object()) {
    throw ContractError("trace: feature bundle must be an object");
  }
  FeatureBundle b;
  for (const auto& [name, values] : j.items()) {
    const ProbeSpec* spec = trace.find_spec(name);
    if (spec == nullptr || spec->stage != stage) {
      throw ContractError("trace: field '" + name + "' is not a " +
                          std::string(to_string(stage)) + " probe");
    }
    if (spec->kind == ProbeKind::NodeIndex) {
      b.index[name] = values.get<std::vector<int>>();
    } else {
      b.real[name] = values.get<std::vector<double>>();
    }
  }
  return b;
}

}  // namespace

std::string trace_to_json(const Trace& trace, int indent) {
  json j;
  j["task"] = trace.task;
  j["n"] = trace.graph.n();
  json edges = json::array();
  for (const auto& e : trace.graph.edges()) {
    edges.push_back({e.src, e.dst});
  }
  j["edges"] = std::move(edges);
  json specs = json::array();
  for (const auto& s : trace.specs) {
    specs.push_back({{"name", s.name},
                     {"stage", to_string(s.stage)},
                     {"location", to_string(s.location)},
                     {"kind", to_string(s.kind)}});
  }
  j["probe_specs"] = std::move(specs);
  j["inputs"] = bundle_to_json(trace.inputs);
  json hints = json::array();
  for (const auto& h : trace.hints) {
    hints.push_back(bundle_to_json(h));
  }
  j["hints"] = std::move(hints);
  j["outputs"] = bundle_to_json(trace.outputs);
  j["T"] = trace.T;
  return j.dump(indent);
}

Trace trace_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ContractError(std::string("trace: ") + e.what());
  }
  try {
    Trace t;
    t.task = j.value("task", std::string());
    const int n = j.at("n").get<int>();
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) {
        throw ContractError("trace: each edge must be a [src, dst] pair");
      }
      edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }
    t.graph = Graph::from_edges(n, std::move(edges));
    for (const auto& s : j.at("probe_specs")) {
      const auto stage = parse_stage(s.at("stage").get<std::string>());
      const auto loc = parse_location(s.at("location").get<std::string>());
      const auto kind = parse_kind(s.at("kind").get<std::string>());
      if (!stage || !loc || !kind) {
        throw ContractError("trace: bad probe spec " + s.dump());
      }
      t.specs.push_back({s.at("name").get<std::string>(), *stage, *loc, *kind});
    }
    t.inputs = bundle_from_json(j.at("inputs"), t, Stage::Input);
    for (const auto& h : j.at("hints")) {
      t.hints.push_back(bundle_from_json(h, t, Stage::Hint));
    }
    t.outputs = bundle_from_json(j.at("outputs"), t, Stage::Output);
    t.T = j.at("T").get<int>();
    return t;
  } catch (const json::exception& e) {
    throw ContractError(std::string("trace: ") + e.what());
  }
}

void save_trace(const std::string& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  out << trace_to_json(trace) << '\n';
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return trace_from_json(ss.str());
}

}  // namespace cef
