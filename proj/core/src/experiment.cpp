// SPDX-License-Identifier: Apache-2.0
#include "cef/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cef {

using nlohmann::json;
namespace fs = std::filesystem;

ConfigError::ConfigError(int line, const std::string& message)
    : ContractError(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line),
      message_(message) {}

ConfigError::ConfigError(int line, const std::string& message, const std::string& where)
    : ContractError(where + ": " + message), line_(line), message_(message) {}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int line_at(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

/// First line mentioning "key" as a JSON string; 0 when absent.
int line_of(std::string_view text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  return pos == std::string_view::npos ? 0 : line_at(text, pos);
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    throw ConfigError(line_of(text_, key), message);
  }

  void allow(const json& obj, const std::string& where, std::initializer_list<const char*> keys) const {
    if (!obj.is_object()) {
      fail(where, "'" + where + "' must be an object");
    }
    for (const auto& [k, _] : obj.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
        fail(k, "unknown key '" + k + "' in " + where);
      }
    }
  }

  template <typename T>
  T get(const json& obj, const std::string& key, const char* expected) const {
    try {
      return obj.at(key).get<T>();
    } catch (const json::exception&) {
      fail(key, "'" + key + "' must be " + expected);
    }
  }

  template <typename T>
  void maybe(const json& obj, const std::string& key, T& dst, const char* expected) const {
    if (obj.contains(key)) {
      dst = get<T>(obj, key, expected);
    }
  }

  [[nodiscard]] std::string_view text() const { return text_; }

 private:
  std::string_view text_;
};

SamplerParams read_sizes(const Reader& r, const json& obj, const std::string& where) {
  r.allow(obj, where, {"n_min", "n_max", "edge_probability", "weight_min", "weight_max"});
  SamplerParams s;
  r.maybe(obj, "n_min", s.n_min, "an integer");
  r.maybe(obj, "n_max", s.n_max, "an integer");
  r.maybe(obj, "edge_probability", s.edge_probability, "a number");
  r.maybe(obj, "weight_min", s.weight_min, "a number");
  r.maybe(obj, "weight_max", s.weight_max, "a number");
  return s;
}

json sizes_json(const SamplerParams& s) {
  return json{{"n_min", s.n_min},
              {"n_max", s.n_max},
              {"edge_probability", s.edge_probability},
              {"weight_min", s.weight_min},
              {"weight_max", s.weight_max}};
}

bool same(const SamplerParams& a, const SamplerParams& b) {
  return a.n_min == b.n_min && a.n_max == b.n_max && a.edge_probability == b.edge_probability &&
         a.weight_min == b.weight_min && a.weight_max == b.weight_max;
}

void validate_impl(const ExperimentConfig& c, std::string_view text) {
  const Reader r(text);
  if (c.version != kConfigVersion) {
    r.fail("version", "unsupported config version " + std::to_string(c.version));
  }
  if (c.tasks.empty()) {
    r.fail("tasks", "'tasks' must list at least one task");
  }
  if (std::set<TaskId>(c.tasks.begin(), c.tasks.end()).size() != c.tasks.size()) {
    r.fail("tasks", "'tasks' lists a task twice");
  }
  if (c.seeds.empty()) {
    r.fail("seeds", "'seeds' must list at least one seed");
  }
  const auto& a = c.ablations;
  if (a.gate_swap && a.attention_preprocessor) {
    r.fail("gate_swap", "gate_swap and attention_preprocessor are mutually exclusive");
  }
  if (a.no_cross_attention && c.processor != ProcessorType::CefTransformer) {
    r.fail("no_cross_attention", "no_cross_attention needs processor 'cef_transformer'");
  }
  if (a.attention_preprocessor && c.processor != ProcessorType::Gnn) {
    r.fail("attention_preprocessor", "attention_preprocessor needs processor 'gnn'");
  }
  if (a.gate_swap && c.gate != GateVariant::GnnTanhRelu && c.gate != GateVariant::TransformerSigmoid) {
    r.fail("gate_swap", "gate_swap needs a learned gate ('gnn_tanh_relu' or 'transformer_sigmoid')");
  }
  if (c.sweep) {
    if (c.tasks.size() != 1) {
      r.fail("sweep", "an alpha sweep takes exactly one task");
    }
    if (c.sweep->alpha_1.empty() || c.sweep->alpha_2.empty()) {
      r.fail("sweep", "sweep axes must not be empty");
    }
    for (const auto* axis : {&c.sweep->alpha_1, &c.sweep->alpha_2}) {
      for (double v : *axis) {
        if (!(v >= 0.0 && v <= 1.0)) {
          const int line = line_of(text, axis == &c.sweep->alpha_1 ? "alpha_1" : "alpha_2");
          throw DomainError((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
                            "sweep value " + fmt(v) + " outside [0, 1]");
        }
      }
    }
  }
  try {
    validate(train_config(c, c.tasks.front(), c.seeds.front()));
  } catch (const ConfigError&) {
    throw;
  } catch (const DomainError& e) {
    throw ConfigError(0, e.what());
  } catch (const ContractError& e) {
    const int line = line_of(text, "gate");
    throw ConfigError(line, e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(line_at(text, e.byte == 0 ? 0 : e.byte - 1), "malformed JSON");
  }
  const Reader r(text);
  r.allow(doc, "config",
          {"version", "name", "tasks", "processor", "gate", "hidden", "batch_size", "steps",
           "learning_rate", "seeds", "train_sizes", "eval_sizes", "eval_instances", "clip_norm",
           "ablations", "sweep", "output_dir"});
  for (const char* key : {"version", "tasks", "processor"}) {
    if (!doc.contains(key)) {
      throw ConfigError(line_at(text, text.find('{')),
                        std::string("missing required key '") + key + "'");
    }
  }
  ExperimentConfig c;
  c.version = r.get<int>(doc, "version", "an integer");
  r.maybe(doc, "name", c.name, "a string");
  c.tasks.clear();
  for (const auto& name : r.get<std::vector<std::string>>(doc, "tasks", "a list of task names")) {
    const auto id = parse_task(name);
    if (!id) {
      r.fail(name, "unknown task '" + name + "'");
    }
    c.tasks.push_back(*id);
  }
  const auto proc = r.get<std::string>(doc, "processor", "a string");
  const auto p = parse_processor(proc);
  if (!p) {
    r.fail("processor", "unknown processor '" + proc + "'");
  }
  c.processor = *p;
  if (doc.contains("gate")) {
    const auto name = r.get<std::string>(doc, "gate", "a string");
    const auto g = parse_gate(name);
    if (!g) {
      r.fail("gate", "unknown gate '" + name + "'");
    }
    c.gate = *g;
  } else if (c.processor == ProcessorType::CefTransformer) {
    c.gate = GateVariant::TransformerSigmoid;
  }
  r.maybe(doc, "hidden", c.hidden, "an integer");
  if (doc.contains("batch_size")) {
    c.batch_size = r.get<int>(doc, "batch_size", "an integer");
  }
  r.maybe(doc, "steps", c.steps, "an integer");
  if (doc.contains("learning_rate")) {
    c.learning_rate = r.get<double>(doc, "learning_rate", "a number");
  }
  r.maybe(doc, "seeds", c.seeds, "a list of non-negative integers");
  if (doc.contains("train_sizes")) {
    c.train_sizes = read_sizes(r, doc["train_sizes"], "train_sizes");
  }
  if (doc.contains("eval_sizes")) {
    c.eval_sizes = read_sizes(r, doc["eval_sizes"], "eval_sizes");
  }
  r.maybe(doc, "eval_instances", c.eval_instances, "an integer");
  r.maybe(doc, "clip_norm", c.clip_norm, "a number");
  if (doc.contains("ablations")) {
    const json& a = doc["ablations"];
    r.allow(a, "ablations", {"gate_swap", "no_cross_attention", "attention_preprocessor"});
    r.maybe(a, "gate_swap", c.ablations.gate_swap, "true or false");
    r.maybe(a, "no_cross_attention", c.ablations.no_cross_attention, "true or false");
    r.maybe(a, "attention_preprocessor", c.ablations.attention_preprocessor, "true or false");
  }
  if (doc.contains("sweep")) {
    const json& s = doc["sweep"];
    r.allow(s, "sweep", {"alpha_1", "alpha_2", "include_baseline"});
    SweepGrid grid;
    grid.alpha_1 = r.get<std::vector<double>>(s, "alpha_1", "a list of numbers");
    grid.alpha_2 = r.get<std::vector<double>>(s, "alpha_2", "a list of numbers");
    r.maybe(s, "include_baseline", grid.include_baseline, "true or false");
    c.sweep = grid;
  }
  r.maybe(doc, "output_dir", c.output_dir, "a string");
  validate_impl(c, text);
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(0, "cannot read config '" + path.string() + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    const std::string where =
        path.string() + (e.line() > 0 ? ":" + std::to_string(e.line()) : std::string());
    throw ConfigError(e.line(), e.message(), where);
  }
}

namespace {

json config_object(const ExperimentConfig& c) {
  json doc;
  doc["version"] = c.version;
  doc["name"] = c.name;
  json tasks = json::array();
  for (auto t : c.tasks) {
    tasks.push_back(std::string(to_string(t)));
  }
  doc["tasks"] = tasks;
  doc["processor"] = std::string(to_string(c.processor));
  doc["gate"] = std::string(to_string(c.gate));
  doc["hidden"] = c.hidden;
  if (c.batch_size) {
    doc["batch_size"] = *c.batch_size;
  }
  doc["steps"] = c.steps;
  if (c.learning_rate) {
    doc["learning_rate"] = *c.learning_rate;
  }
  doc["seeds"] = c.seeds;
  doc["train_sizes"] = sizes_json(c.train_sizes);
  doc["eval_sizes"] = sizes_json(c.eval_sizes);
  doc["eval_instances"] = c.eval_instances;
  doc["clip_norm"] = c.clip_norm;
  doc["ablations"] = json{{"gate_swap", c.ablations.gate_swap},
                          {"no_cross_attention", c.ablations.no_cross_attention},
                          {"attention_preprocessor", c.ablations.attention_preprocessor}};
  if (c.sweep) {
    doc["sweep"] = json{{"alpha_1", c.sweep->alpha_1},
                        {"alpha_2", c.sweep->alpha_2},
                        {"include_baseline", c.sweep->include_baseline}};
  }
  doc["output_dir"] = c.output_dir;
  return doc;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& c) { return config_object(c).dump(2) + "\n"; }

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  const bool sweeps = a.sweep.has_value() == b.sweep.has_value() &&
                      (!a.sweep || (a.sweep->alpha_1 == b.sweep->alpha_1 &&
                                    a.sweep->alpha_2 == b.sweep->alpha_2 &&
                                    a.sweep->include_baseline == b.sweep->include_baseline));
  return a.version == b.version && a.name == b.name && a.tasks == b.tasks &&
         a.processor == b.processor && a.gate == b.gate && a.hidden == b.hidden &&
         a.batch_size == b.batch_size && a.steps == b.steps &&
         a.learning_rate == b.learning_rate && a.seeds == b.seeds &&
         same(a.train_sizes, b.train_sizes) && same(a.eval_sizes, b.eval_sizes) &&
         a.eval_instances == b.eval_instances && a.clip_norm == b.clip_norm &&
         a.ablations.gate_swap == b.ablations.gate_swap &&
         a.ablations.no_cross_attention == b.ablations.no_cross_attention &&
         a.ablations.attention_preprocessor == b.ablations.attention_preprocessor && sweeps &&
         a.output_dir == b.output_dir;
}

void validate(const ExperimentConfig& config) { validate_impl(config, {}); }

TrainConfig train_config(const ExperimentConfig& c, TaskId task, std::uint64_t seed) {
  TrainConfig t = TrainConfig::defaults(task, c.processor);
  t.model.gate.variant = c.gate;
  t.model.hidden = c.hidden;
  if (c.batch_size) {
    t.batch_size = *c.batch_size;
  }
  if (c.learning_rate) {
    t.learning_rate = *c.learning_rate;
  }
  t.steps = c.steps;
  t.seed = seed;
  t.train_sizes = c.train_sizes;
  t.eval_sizes = c.eval_sizes;
  t.eval_instances = c.eval_instances;
  t.clip_norm = c.clip_norm;
  if (c.ablations.attention_preprocessor) {
    t.model.gate.variant = GateVariant::Attention;
  }
  if (c.ablations.no_cross_attention) {
    t.model.cross_attention = false;
  }
  if (c.ablations.gate_swap) {
    t.model.gate.activation = effective_activation(t.model) == ForgetActivation::Sigmoid
                                  ? ForgetActivation::TanhRelu
                                  : ForgetActivation::Sigmoid;
  }
  return t;
}

fs::path default_output_root() {
  const char* env = std::getenv("CEF_OUTPUT_ROOT");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("runs");
}

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ContractError("cannot write '" + path.string() + "'");
  }
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

/// Rows of a CSV with the given header; each row has exactly header.size() cells.
std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) {
    throw ContractError("cannot read '" + path.string() + "'");
  }
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw ContractError(path.string() + ": expected header '" + header + "'");
  }
  const auto width = split(header).size();
  std::vector<std::vector<std::string>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    auto cells = split(line);
    if (cells.size() != width) {
      throw ContractError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                          std::to_string(width) + " cells");
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) {
    throw ContractError("malformed number '" + s + "'");
  }
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::size_t used = 0;
  const auto v = std::stoull(s, &used);
  if (used != s.size()) {
    throw ContractError("malformed integer '" + s + "'");
  }
  return v;
}

json summary_json(const MetricSummary& s) { return json{{"mean", s.mean}, {"std", s.std}}; }

}  // namespace

void run_experiment(const ExperimentConfig& config, const fs::path& out, int jobs) {
  validate(config);
  json results;
  results["format"] = "cef-results";
  results["version"] = 1;
  results["name"] = config.name;
  results["config"] = config_object(config);
  json tasks = json::object();
  std::ostringstream metrics;
  std::ostringstream timing;
  metrics << "task,seed,stage,probe,score\n";
  timing << "task,seed,phase,seconds\n";

  for (TaskId task : config.tasks) {
    const std::string tname(to_string(task));
    const MultiSeedReport report = multi_seed(train_config(config, task, 0), config.seeds, jobs);
    json entry;
    json summaries = json::object();
    for (const auto& [name, s] : report.metrics) {
      if (name.rfind("seconds.", 0) != 0) {
        summaries[name] = summary_json(s);
      }
    }
    entry["aggregate"] = summary_json(report.metrics.at("aggregate"));
    entry["metrics"] = summaries;
    json seeds = json::array();
    for (const auto& run : report.runs) {
      json s;
      s["seed"] = run.seed;
      s["aggregate"] = run.report.aggregate;
      s["hint_aggregate"] = run.report.hint_aggregate;
      s["instances"] = run.report.instances;
      json outs = json::object();
      for (const auto& p : run.report.outputs) {
        outs[p.name] = p.score;
        metrics << tname << ',' << run.seed << ",output," << p.name << ',' << fmt(p.score) << '\n';
      }
      json hints = json::object();
      for (const auto& p : run.report.hints) {
        hints[p.name] = p.score;
        metrics << tname << ',' << run.seed << ",hint," << p.name << ',' << fmt(p.score) << '\n';
      }
      metrics << tname << ',' << run.seed << ",aggregate,output," << fmt(run.report.aggregate) << '\n';
      metrics << tname << ',' << run.seed << ",aggregate,hint," << fmt(run.report.hint_aggregate)
              << '\n';
      s["outputs"] = outs;
      s["hints"] = hints;
      seeds.push_back(s);
      for (const auto& [phase, secs] : run.report.seconds) {
        timing << tname << ',' << run.seed << ',' << phase << ',' << fmt(secs) << '\n';
      }
      auto log = open_out(out / "logs" / (tname + "_seed" + std::to_string(run.seed) + ".csv"));
      write_train_log(log, run.log);
    }
    entry["seeds"] = seeds;
    tasks[tname] = entry;
  }
  results["tasks"] = tasks;
  open_out(out / "results.json") << results.dump(2) << '\n';
  open_out(out / "metrics.csv") << metrics.str();
  open_out(out / "timing.csv") << timing.str();
}

std::string eval_report_json(const EvalReport& report) {
  json doc;
  for (const auto* part : {&report.outputs, &report.hints}) {
    json probes = json::object();
    for (const auto& p : *part) {
      probes[p.name] = json{{"kind", std::string(to_string(p.kind))},
                            {"score", p.score},
                            {"elements", p.elements}};
    }
    doc[part == &report.outputs ? "outputs" : "hints"] = probes;
  }
  doc["aggregate"] = report.aggregate;
  doc["hint_aggregate"] = report.hint_aggregate;
  doc["instances"] = report.instances;
  doc["seconds"] = report.seconds;
  return doc.dump(2) + "\n";
}

std::pair<std::string, std::string> sweep_axes(ProcessorType processor) {
  if (processor == ProcessorType::Gnn) {
    return {"s_context", "h_context"};
  }
  return {"node_context", "edge_context"};
}

SweepResult sweep_alpha(const ExperimentConfig& config, const fs::path& out, int jobs) {
  validate(config);
  if (!config.sweep) {
    throw ConfigError(0, "config has no 'sweep' grid");
  }
  const TaskId task = config.tasks.front();
  ExperimentConfig fixed = config;
  fixed.ablations = {};
  fixed.gate = GateVariant::Fixed;
  if (fixed.processor == ProcessorType::Transformer) {
    fixed.processor = ProcessorType::CefTransformer;
  }
  ExperimentConfig base = fixed;
  base.gate = GateVariant::None;
  if (base.processor == ProcessorType::CefTransformer) {
    base.processor = ProcessorType::Transformer;
  }

  SweepResult result;
  std::tie(result.axis_1, result.axis_2) = sweep_axes(fixed.processor);

  struct Cell {
    TrainConfig cfg;
    double a1, a2;
    bool baseline;
  };
  std::vector<Cell> cells;
  for (double a1 : config.sweep->alpha_1) {
    for (double a2 : config.sweep->alpha_2) {
      for (auto seed : config.seeds) {
        TrainConfig t = train_config(fixed, task, seed);
        t.model.gate.alpha_node = a1;
        t.model.gate.alpha_edge = a2;
        cells.push_back({t, a1, a2, false});
      }
    }
  }
  if (config.sweep->include_baseline) {
    for (auto seed : config.seeds) {
      cells.push_back({train_config(base, task, seed), 0.0, 0.0, true});
    }
  }
  std::vector<double> scores(cells.size());
  const auto workers = static_cast<std::size_t>(std::max(jobs, 1));
  for (std::size_t b = 0; b < cells.size(); b += workers) {
    std::vector<std::future<double>> pending;
    for (std::size_t i = b; i < std::min(cells.size(), b + workers); ++i) {
      const TrainConfig t = cells[i].cfg;
      pending.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred,
                                   [t] { return train_and_evaluate(t).report.aggregate; }));
    }
    for (std::size_t i = 0; i < pending.size(); ++i) {
      scores[b + i] = pending[i].get();
    }
  }

  std::ostringstream csv;
  csv << "alpha_1,alpha_2,seed,score\n";
  std::map<std::pair<double, double>, std::vector<double>> grid;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (c.baseline) {
      result.baseline.emplace_back(c.cfg.seed, scores[i]);
      continue;
    }
    result.rows.push_back({c.a1, c.a2, c.cfg.seed, scores[i]});
    csv << fmt(c.a1) << ',' << fmt(c.a2) << ',' << c.cfg.seed << ',' << fmt(scores[i]) << '\n';
    grid[{c.a1, c.a2}].push_back(scores[i]);
  }
  open_out(out / "sweep.csv") << csv.str();

  std::ostringstream g;
  g << "axis_1,axis_2,alpha_1,alpha_2,mean,std\n";
  for (double a1 : config.sweep->alpha_1) {
    for (double a2 : config.sweep->alpha_2) {
      const auto s = summarize(grid.at({a1, a2}));
      g << result.axis_1 << ',' << result.axis_2 << ',' << fmt(a1) << ',' << fmt(a2) << ','
        << fmt(s.mean) << ',' << fmt(s.std) << '\n';
    }
  }
  open_out(out / "sweep_grid.csv") << g.str();

  if (config.sweep->include_baseline) {
    std::ostringstream bl;
    bl << "seed,score\n";
    for (const auto& [seed, score] : result.baseline) {
      bl << seed << ',' << fmt(score) << '\n';
    }
    open_out(out / "sweep_baseline.csv") << bl.str();
  }
  return result;
}

std::vector<SweepRow> read_sweep_csv(const fs::path& path) {
  std::vector<SweepRow> out;
  for (const auto& r : read_csv(path, "alpha_1,alpha_2,seed,score")) {
    out.push_back({to_double(r[0]), to_double(r[1]), to_u64(r[2]), to_double(r[3])});
  }
  return out;
}

std::vector<TimingRow> read_timing_csv(const fs::path& path) {
  std::vector<TimingRow> out;
  for (const auto& r : read_csv(path, "task,seed,phase,seconds")) {
    out.push_back({r[0], to_u64(r[1]), r[2], to_double(r[3])});
  }
  return out;
}

std::vector<MetricRow> read_metrics_csv(const fs::path& path) {
  std::vector<MetricRow> out;
  for (const auto& r : read_csv(path, "task,seed,stage,probe,score")) {
    out.push_back({r[0], to_u64(r[1]), r[2], r[3], to_double(r[4])});
  }
  return out;
}

namespace {

struct TaskSummary {
  double score = 0.0;
  std::optional<double> seconds;
};

std::map<std::string, TaskSummary> load_results(const std::vector<fs::path>& paths) {
  std::map<std::string, TaskSummary> out;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) {
      throw ContractError("cannot read '" + path.string() + "'");
    }
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw ContractError(path.string() + ": " + e.what());
    }
    if (doc.value("format", "") != "cef-results") {
      throw ContractError(path.string() + ": not a results file");
    }
    std::map<std::string, std::vector<double>> secs;
    const auto timing = path.parent_path() / "timing.csv";
    if (fs::exists(timing)) {
      for (const auto& row : read_timing_csv(timing)) {
        if (row.phase == "train") {
          secs[row.task].push_back(row.seconds);
        }
      }
    }
    for (const auto& [task, entry] : doc.at("tasks").items()) {
      TaskSummary s;
      s.score = entry.at("aggregate").at("mean").get<double>();
      if (auto it = secs.find(task); it != secs.end()) {
        s.seconds = summarize(it->second).mean;
      }
      out[task] = s;
    }
  }
  return out;
}

std::string opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::optional<double> opt_number(const std::string& s) {
  if (s.empty()) {
    return std::nullopt;
  }
  return to_double(s);
}

void write_svg(const fs::path& path, const std::vector<ComparisonRow>& rows) {
  const int bar_h = 22;
  const int label_w = 140;
  const int plot_w = 360;
  const int height = static_cast<int>(rows.size()) * bar_h + 40;
  double span = 1e-9;
  for (const auto& r : rows) {
    span = std::max(span, std::abs(r.delta));
  }
  const double zero = label_w + plot_w / 2.0;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << label_w + plot_w + 80
      << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<line x1=\"" << zero << "\" y1=\"10\" x2=\"" << zero << "\" y2=\"" << height - 20
      << "\" stroke=\"#444\"/>\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double w = std::abs(r.delta) / span * (plot_w / 2.0 - 10);
    const double x = r.delta >= 0 ? zero : zero - w;
    const int y = 20 + static_cast<int>(i) * bar_h;
    svg << "<text x=\"4\" y=\"" << y + 14 << "\">" << r.task << "</text>\n";
    svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\""
        << bar_h - 6 << "\" fill=\"" << (r.delta >= 0 ? "#3a7" : "#c54") << "\"/>\n";
    char label[32];
    std::snprintf(label, sizeof label, "%+.4f", r.delta);
    svg << "<text x=\"" << label_w + plot_w + 4 << "\" y=\"" << y + 14 << "\">" << label
        << "</text>\n";
  }
  svg << "</svg>\n";
  open_out(path) << svg.str();
}

}  // namespace

std::vector<ComparisonRow> compare(const std::vector<fs::path>& base,
                                   const std::vector<fs::path>& cef) {
  const auto b = load_results(base);
  const auto c = load_results(cef);
  std::vector<ComparisonRow> rows;
  for (const auto& [task, bs] : b) {
    auto it = c.find(task);
    if (it == c.end()) {
      continue;
    }
    ComparisonRow row;
    row.task = task;
    row.base_score = bs.score;
    row.cef_score = it->second.score;
    row.delta = row.cef_score - row.base_score;
    row.base_seconds = bs.seconds;
    row.cef_seconds = it->second.seconds;
    if (bs.seconds && it->second.seconds && *bs.seconds > 0.0) {
      row.time_ratio = *it->second.seconds / *bs.seconds;
    }
    rows.push_back(row);
  }
  if (rows.empty()) {
    throw ContractError("compare: the result sets share no task");
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) {
    return x.delta != y.delta ? x.delta > y.delta : x.task < y.task;
  });
  return rows;
}

void write_comparison(const fs::path& out, const std::vector<ComparisonRow>& rows) {
  std::ostringstream csv;
  csv << "task,base_score,cef_score,delta,base_seconds,cef_seconds,time_ratio\n";
  for (const auto& r : rows) {
    csv << r.task << ',' << fmt(r.base_score) << ',' << fmt(r.cef_score) << ',' << fmt(r.delta)
        << ',' << opt(r.base_seconds) << ',' << opt(r.cef_seconds) << ',' << opt(r.time_ratio)
        << '\n';
  }
  open_out(out / "comparison.csv") << csv.str();
  write_svg(out / "comparison.svg", rows);
}

std::vector<ComparisonRow> read_comparison_csv(const fs::path& path) {
  std::vector<ComparisonRow> out;
  for (const auto& r :
       read_csv(path, "task,base_score,cef_score,delta,base_seconds,cef_seconds,time_ratio")) {
    out.push_back({r[0], to_double(r[1]), to_double(r[2]), to_double(r[3]), opt_number(r[4]),
                   opt_number(r[5]), opt_number(r[6])});
  }
  return out;
}

}  // namespace cef
