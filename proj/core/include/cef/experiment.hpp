// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cef/train.hpp"

namespace cef {

inline constexpr int kConfigVersion = 1;

/// Configuration problem, optionally pinned to a line of the source text.
class ConfigError : public ContractError {
 public:
  ConfigError(int line, const std::string& message);
  /// `where` replaces the default "line N" prefix, e.g. "file.json:N".
  ConfigError(int line, const std::string& message, const std::string& where);
  [[nodiscard]] int line() const { return line_; }  // 0 when unknown
  [[nodiscard]] const std::string& message() const { return message_; }

 private:
  int line_;
  std::string message_;
};

struct Ablations {
  /// Swap the forget activation of the learned gate (tanh+relu <-> sigmoid).
  bool gate_swap = false;
  /// CEF-RT without cross attention.
  bool no_cross_attention = false;
  /// Replace the gated context with attention over stored latents.
  bool attention_preprocessor = false;
};

struct SweepGrid {
  std::vector<double> alpha_1;
  std::vector<double> alpha_2;
  /// Also train the preprocessor-free model per seed for reference.
  bool include_baseline = false;
};

struct ExperimentConfig {
  int version = kConfigVersion;
  std::string name = "experiment";
  std::vector<TaskId> tasks;
  ProcessorType processor = ProcessorType::Gnn;
  GateVariant gate = GateVariant::None;
  int hidden = 64;
  std::optional<int> batch_size;        // processor default when absent
  int steps = 2000;
  std::optional<double> learning_rate;  // processor default when absent
  std::vector<std::uint64_t> seeds{std::begin(kDefaultSeeds), std::end(kDefaultSeeds)};
  SamplerParams train_sizes;
  SamplerParams eval_sizes{8, 16};
  int eval_instances = 64;
  double clip_norm = 0.0;
  Ablations ablations;
  std::optional<SweepGrid> sweep;
  std::string output_dir;  // empty: caller decides
};

/// Parses and validates. Unknown keys, wrong types and conflicting switches
/// raise ConfigError with the line of the offending key.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON; parse_config(config_to_json(c)) == c.
std::string config_to_json(const ExperimentConfig& config);
bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// Throws ConfigError (line 0) on inconsistent settings.
void validate(const ExperimentConfig& config);

/// Resolved training configuration for one task, ablations applied.
TrainConfig train_config(const ExperimentConfig& config, TaskId task, std::uint64_t seed);

/// Default output root: $CEF_OUTPUT_ROOT, else "runs".
std::filesystem::path default_output_root();

/// Trains and evaluates every task over every seed; writes results.json,
/// metrics.csv, timing.csv and per-seed training logs under `out`.
void run_experiment(const ExperimentConfig& config, const std::filesystem::path& out,
                    int jobs = 1);

/// EvalReport as JSON: outputs, hints, aggregate, hint_aggregate, instances,
/// seconds.
std::string eval_report_json(const EvalReport& report);

struct SweepRow {
  double alpha_1 = 0.0;
  double alpha_2 = 0.0;
  std::uint64_t seed = 0;
  double score = 0.0;
};

struct SweepResult {
  std::string axis_1;
  std::string axis_2;
  std::vector<SweepRow> rows;
  std::vector<std::pair<std::uint64_t, double>> baseline;
};

/// Fixed-gate training over the grid for the config's single task; writes
/// sweep.csv (alpha_1, alpha_2, seed, score), sweep_grid.csv (seed means)
/// and, when requested, sweep_baseline.csv.
SweepResult sweep_alpha(const ExperimentConfig& config, const std::filesystem::path& out,
                        int jobs = 1);

/// Axis labels of the sweep for a processor.
std::pair<std::string, std::string> sweep_axes(ProcessorType processor);

struct ComparisonRow {
  std::string task;
  double base_score = 0.0;
  double cef_score = 0.0;
  double delta = 0.0;
  std::optional<double> base_seconds;
  std::optional<double> cef_seconds;
  std::optional<double> time_ratio;  // cef / base
};

/// Per-task mean aggregates of two result sets, sorted by delta descending
/// (ties by task name). Training seconds come from timing.csv next to each
/// results.json when present. Throws ContractError when no task is shared.
std::vector<ComparisonRow> compare(const std::vector<std::filesystem::path>& base,
                                   const std::vector<std::filesystem::path>& cef);

void write_comparison(const std::filesystem::path& out, const std::vector<ComparisonRow>& rows);
std::vector<ComparisonRow> read_comparison_csv(const std::filesystem::path& path);
std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path);

struct TimingRow {
  std::string task;
  std::uint64_t seed = 0;
  std::string phase;
  double seconds = 0.0;
};
std::vector<TimingRow> read_timing_csv(const std::filesystem::path& path);

struct MetricRow {
  std::string task;
  std::uint64_t seed = 0;
  std::string stage;  // "output", "hint" or "aggregate"
  std::string probe;
  double score = 0.0;
};
std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path);

}  // namespace cef
