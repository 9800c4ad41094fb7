// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cef/adam.hpp"
#include "cef/pipeline.hpp"
#include "cef/tasks.hpp"

namespace cef {

inline constexpr std::uint64_t kDefaultSeeds[] = {5, 18, 25, 30, 42};

struct TrainConfig {
  TaskId task = TaskId::Bfs;
  ModelConfig model;
  int batch_size = 32;
  int steps = 2000;
  double learning_rate = 1e-3;
  std::uint64_t seed = 42;
  SamplerParams train_sizes;
  SamplerParams eval_sizes{8, 16};
  int eval_instances = 64;
  /// Global-norm gradient clipping; 0 disables it.
  double clip_norm = 0.0;

  /// Batch 32 / lr 1e-3 for message passing, batch 4 / lr 2.5e-4 for the
  /// attention processors.
  static TrainConfig defaults(TaskId task, ProcessorType processor);
};

/// Throws DomainError on non-positive sizes or rates.
void validate(const TrainConfig& config);

struct TrainLogRow {
  int step = 0;
  double loss = 0.0;
  double seconds = 0.0;  // elapsed since training began
};

struct TrainResult {
  ParamStore params;
  std::vector<TrainLogRow> log;
  double seconds = 0.0;
};

/// Raised when a step's loss is NaN or infinite. `dump()` is a JSON array of
/// the traces in the offending batch.
class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(int step, std::string dump);
  [[nodiscard]] int step() const { return step_; }
  [[nodiscard]] const std::string& dump() const { return dump_; }

 private:
  int step_;
  std::string dump_;
};

using TrainProgress = std::function<void(const TrainLogRow&)>;

/// Samples a fresh batch every step and minimizes the summed teacher-forced
/// step losses with Adam.
TrainResult train(const TrainConfig& config, const TrainProgress& progress = {});

/// Cycles through a fixed dataset instead of sampling (memorization checks).
TrainResult train_on(const TrainConfig& config, std::span<const Trace> dataset,
                     const TrainProgress& progress = {});

void write_train_log(std::ostream& out, std::span<const TrainLogRow> log);
std::vector<TrainLogRow> read_train_log(std::istream& in);

struct ProbeScore {
  std::string name;
  Stage stage = Stage::Output;
  ProbeKind kind = ProbeKind::Mask;
  double score = 0.0;
  std::int64_t elements = 0;
};

struct EvalReport {
  std::vector<ProbeScore> outputs;
  std::vector<ProbeScore> hints;
  /// Element-weighted mean of the output probe scores.
  double aggregate = 0.0;
  double hint_aggregate = 0.0;
  int instances = 0;
  std::map<std::string, double> seconds;  // phase -> wall clock
};

/// Deterministic evaluation set; depends on the seed and sizes only.
std::vector<Trace> sample_dataset(TaskId task, int count, std::uint64_t seed,
                                  const SamplerParams& sizes);

/// Free-running rollouts scored against the ground truth. Masks use F1 over
/// the positive class (1 when prediction and target are both empty),
/// node_index exact match, scalars |err| < 0.01.
EvalReport evaluate(const Model& model, std::span<const Trace> dataset, int batch_size = 32,
                    const PredictionHook& hook = {});

/// Scores already-hardened predictions; hints[t-1] per graph as in rollouts.
EvalReport score_predictions(const TaskSpec& spec, std::span<const Trace> dataset,
                             std::span<const FeatureBundle> outputs,
                             std::span<const std::vector<FeatureBundle>> hints);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
};

MetricSummary summarize(std::span<const double> values);

struct SeedRun {
  std::uint64_t seed = 0;
  EvalReport report;
  std::vector<TrainLogRow> log;
};

struct MultiSeedReport {
  std::vector<SeedRun> runs;
  /// "aggregate", "hint_aggregate", "output.<probe>", "hint.<probe>",
  /// "seconds.<phase>".
  std::map<std::string, MetricSummary> metrics;
};

/// Trains and evaluates once per seed. Seeds run on up to `jobs` threads; the
/// result does not depend on `jobs`.
MultiSeedReport multi_seed(const TrainConfig& config, std::span<const std::uint64_t> seeds,
                           int jobs = 1);

SeedRun train_and_evaluate(const TrainConfig& config);

}  // namespace cef
