// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <map>
#include <string>

#include "cef/train.hpp"

namespace cef {

std::vector<Trace> sample_dataset(TaskId task, int count, std::uint64_t seed,
                                  const SamplerParams& sizes) {
  Rng rng(derive_seed(seed, 2));
  std::vector<Trace> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    out.push_back(sample_trace(task, rng, sizes));
  }
  return out;
}

namespace {

constexpr double kScalarTolerance = 0.01;

struct Tally {
  std::int64_t tp = 0, fp = 0, fn = 0;
  std::int64_t correct = 0, total = 0;

  [[nodiscard]] double score(ProbeKind kind) const {
    if (kind == ProbeKind::Mask) {
      const auto denom = 2 * tp + fp + fn;
      return denom == 0 ? 1.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
    }
    return total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total);
  }
};

void tally(const ProbeSpec& p, const Graph& g, const FeatureBundle& pred,
           const FeatureBundle& truth, Tally& t) {
  const int n = g.n();
  if (p.kind == ProbeKind::NodeIndex) {
    const auto& a = pred.index.at(p.name);
    const auto& b = truth.index.at(p.name);
    for (int v = 0; v < n; ++v) {
      t.correct += a[static_cast<std::size_t>(v)] == b[static_cast<std::size_t>(v)] ? 1 : 0;
      t.total += 1;
    }
    return;
  }
  const auto& a = pred.real.at(p.name);
  const auto& b = truth.real.at(p.name);
  auto one = [&](std::size_t i) {
    if (p.kind == ProbeKind::Mask) {
      const bool x = a[i] > 0.5;
      const bool y = b[i] > 0.5;
      t.tp += x && y ? 1 : 0;
      t.fp += x && !y ? 1 : 0;
      t.fn += !x && y ? 1 : 0;
      t.total += 1;
    } else {
      t.correct += std::abs(a[i] - b[i]) < kScalarTolerance ? 1 : 0;
      t.total += 1;
    }
  };
  if (p.location == Location::Node) {
    for (int v = 0; v < n; ++v) {
      one(static_cast<std::size_t>(v));
    }
  } else {
    for (const Edge& e : g.edges()) {
      one(static_cast<std::size_t>(e.src * n + e.dst));
    }
  }
}

double weighted_mean(const std::vector<ProbeScore>& scores) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& s : scores) {
    num += s.score * static_cast<double>(s.elements);
    den += static_cast<double>(s.elements);
  }
  return den == 0.0 ? 0.0 : num / den;
}

}  // namespace

EvalReport score_predictions(const TaskSpec& spec, std::span<const Trace> dataset,
                             std::span<const FeatureBundle> outputs,
                             std::span<const std::vector<FeatureBundle>> hints) {
  if (outputs.size() != dataset.size() || (!hints.empty() && hints.size() != dataset.size())) {
    throw ShapeError("score_predictions: one prediction per trace required");
  }
  std::map<std::string, Tally> out_tallies;
  std::map<std::string, Tally> hint_tallies;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Trace& tr = dataset[i];
    for (const ProbeSpec& p : spec.probes) {
      if (p.stage == Stage::Output) {
        tally(p, tr.graph, outputs[i], tr.outputs, out_tallies[p.name]);
      } else if (p.stage == Stage::Hint && !hints.empty()) {
        const auto& h = hints[i];
        const auto steps = std::min(h.size(), static_cast<std::size_t>(tr.T));
        for (std::size_t t = 0; t < steps; ++t) {
          tally(p, tr.graph, h[t], tr.hints[t], hint_tallies[p.name]);
        }
      }
    }
  }
  EvalReport report;
  report.instances = static_cast<int>(dataset.size());
  for (const ProbeSpec& p : spec.probes) {
    if (p.stage == Stage::Input) {
      continue;
    }
    auto& tallies = p.stage == Stage::Output ? out_tallies : hint_tallies;
    auto it = tallies.find(p.name);
    if (it == tallies.end()) {
      continue;
    }
    ProbeScore s{p.name, p.stage, p.kind, it->second.score(p.kind), it->second.total};
    (p.stage == Stage::Output ? report.outputs : report.hints).push_back(s);
  }
  report.aggregate = weighted_mean(report.outputs);
  report.hint_aggregate = weighted_mean(report.hints);
  return report;
}

EvalReport evaluate(const Model& model, std::span<const Trace> dataset, int batch_size,
                    const PredictionHook& hook) {
  if (batch_size < 1) {
    throw DomainError("evaluate: batch_size must be at least 1");
  }
  const auto start = std::chrono::steady_clock::now();
  const auto& specs = model.spec().probes;
  std::vector<FeatureBundle> outputs;
  std::vector<std::vector<FeatureBundle>> hints;
  for (std::size_t b = 0; b < dataset.size(); b += static_cast<std::size_t>(batch_size)) {
    const auto e = std::min(dataset.size(), b + static_cast<std::size_t>(batch_size));
    std::vector<const Trace*> traces;
    std::vector<const Graph*> graphs;
    for (std::size_t i = b; i < e; ++i) {
      traces.push_back(&dataset[i]);
      graphs.push_back(&dataset[i].graph);
    }
    Tape tape(model.params());
    const BatchRollout r = rollout_batch(tape, model, traces, false, false, hook);
    const GraphBatch batch = GraphBatch::from_graphs(graphs);
    for (std::size_t g = 0; g < traces.size(); ++g) {
      const int gi = static_cast<int>(g);
      outputs.push_back(unpack_features(batch, specs, r.outputs, gi));
      std::vector<FeatureBundle> h;
      for (int t = 0; t < traces[g]->T; ++t) {
        h.push_back(unpack_features(batch, specs, r.hints[static_cast<std::size_t>(t)], gi));
      }
      hints.push_back(std::move(h));
    }
  }
  EvalReport report = score_predictions(model.spec(), dataset, outputs, hints);
  report.seconds["eval"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  if (values.empty()) {
    return s;
  }
  double sum = 0.0;
  for (double v : values) {
    sum += v;
  }
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) {
      ss += (v - s.mean) * (v - s.mean);
    }
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

SeedRun train_and_evaluate(const TrainConfig& config) {
  TrainResult trained = train(config);
  const Model model(config.task, config.model, std::move(trained.params));
  const auto dataset =
      sample_dataset(config.task, config.eval_instances, config.seed, config.eval_sizes);
  SeedRun run;
  run.seed = config.seed;
  run.report = evaluate(model, dataset);
  run.report.seconds["train"] = trained.seconds;
  run.log = std::move(trained.log);
  return run;
}

MultiSeedReport multi_seed(const TrainConfig& config, std::span<const std::uint64_t> seeds,
                           int jobs) {
  if (seeds.empty()) {
    throw ContractError("multi_seed: at least one seed required");
  }
  MultiSeedReport out;
  out.runs.resize(seeds.size());
  const auto workers = static_cast<std::size_t>(std::max(jobs, 1));
  for (std::size_t b = 0; b < seeds.size(); b += workers) {
    std::vector<std::future<SeedRun>> pending;
    for (std::size_t i = b; i < std::min(seeds.size(), b + workers); ++i) {
      TrainConfig c = config;
      c.seed = seeds[i];
      pending.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred,
                                   [c] { return train_and_evaluate(c); }));
    }
    for (std::size_t i = 0; i < pending.size(); ++i) {
      out.runs[b + i] = pending[i].get();
    }
  }

  std::map<std::string, std::vector<double>> values;
  for (const auto& run : out.runs) {
    values["aggregate"].push_back(run.report.aggregate);
    values["hint_aggregate"].push_back(run.report.hint_aggregate);
    for (const auto& s : run.report.outputs) {
      values["output." + s.name].push_back(s.score);
    }
    for (const auto& s : run.report.hints) {
      values["hint." + s.name].push_back(s.score);
    }
    for (const auto& [phase, secs] : run.report.seconds) {
      values["seconds." + phase].push_back(secs);
    }
  }
  for (const auto& [name, v] : values) {
    out.metrics[name] = summarize(v);
  }
  return out;
}

}  // namespace cef
