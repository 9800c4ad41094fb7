// SPDX-License-Identifier: Apache-2.0
// cef: generate traces, train, evaluate and run experiment configs.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cef/experiment.hpp"
#include "cef/trace_json.hpp"

namespace fs = std::filesystem;

namespace {

fs::path output_dir(const std::string& flag, const cef::ExperimentConfig& config) {
  if (!flag.empty()) {
    return flag;
  }
  if (!config.output_dir.empty()) {
    return config.output_dir;
  }
  return cef::default_output_root() / config.name;
}

std::vector<cef::Trace> read_traces(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw cef::ContractError("cannot read '" + path.string() + "'");
  }
  std::vector<cef::Trace> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      out.push_back(cef::trace_from_json(line));
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context-enhanced neural algorithmic reasoning experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::uint64_t seed = 42;
  int jobs = 1;

  auto* gen = app.add_subcommand("gen", "Sample algorithm traces as JSON lines");
  std::string task_name = "bfs";
  int count = 10;
  cef::SamplerParams sizes;
  gen->add_option("--task", task_name, "Task name")->required();
  gen->add_option("--count", count, "Number of traces")->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "Sampling seed");
  gen->add_option("--n-min", sizes.n_min, "Smallest graph size")->check(CLI::PositiveNumber);
  gen->add_option("--n-max", sizes.n_max, "Largest graph size")->check(CLI::PositiveNumber);
  gen->add_option("--out", out, "Output file (.jsonl); stdout when absent");

  auto* train = app.add_subcommand("train", "Train the first task of a config for one seed");
  train->add_option("--config", config_path, "Experiment config")->required();
  train->add_option("--seed", seed, "Training seed");
  train->add_option("--out", out, "Output directory");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string checkpoint;
  std::string data;
  eval->add_option("--config", config_path, "Experiment config")->required();
  eval->add_option("--checkpoint", checkpoint, "Parameter file from 'train'")->required();
  eval->add_option("--seed", seed, "Seed of the sampled evaluation set");
  eval->add_option("--data", data, "Evaluate on these traces (.jsonl) instead");
  eval->add_option("--out", out, "Output directory");

  auto* run = app.add_subcommand("run", "Train and evaluate every task over every seed");
  run->add_option("--config", config_path, "Experiment config")->required();
  run->add_option("--out", out, "Output directory");
  run->add_option("--jobs", jobs, "Parallel seeds")->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep-alpha", "Fixed forget-factor grid sweep");
  sweep->add_option("--config", config_path, "Experiment config with a sweep grid")->required();
  sweep->add_option("--out", out, "Output directory");
  sweep->add_option("--jobs", jobs, "Parallel cells")->check(CLI::PositiveNumber);

  auto* cmp = app.add_subcommand("compare", "Per-task deltas between two result sets");
  std::vector<std::string> base;
  std::vector<std::string> cef_paths;
  cmp->add_option("--base", base, "Baseline results.json files")->required();
  cmp->add_option("--cef", cef_paths, "Context-enhanced results.json files")->required();
  cmp->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto task = cef::parse_task(task_name);
      if (!task) {
        std::cerr << "error: unknown task '" << task_name << "'\n";
        return 2;
      }
      if (sizes.n_max < sizes.n_min) {
        std::cerr << "error: --n-max is smaller than --n-min\n";
        return 2;
      }
      std::ofstream file;
      if (!out.empty()) {
        const fs::path p(out);
        if (p.has_parent_path()) {
          fs::create_directories(p.parent_path());
        }
        file.open(p);
      }
      std::ostream& os = out.empty() ? std::cout : file;
      cef::Rng rng(seed);
      for (int i = 0; i < count; ++i) {
        os << cef::trace_to_json(cef::sample_trace(*task, rng, sizes)) << '\n';
      }
      return 0;
    }

    if (cmp->parsed()) {
      std::vector<fs::path> b(base.begin(), base.end());
      std::vector<fs::path> c(cef_paths.begin(), cef_paths.end());
      const auto rows = cef::compare(b, c);
      cef::write_comparison(out, rows);
      for (const auto& r : rows) {
        std::printf("%-16s base %.4f  cef %.4f  delta %+.4f\n", r.task.c_str(), r.base_score,
                    r.cef_score, r.delta);
      }
      return 0;
    }

    const cef::ExperimentConfig config = cef::load_config(config_path);
    const fs::path dir = output_dir(out, config);

    if (train->parsed()) {
      const cef::TaskId task = config.tasks.front();
      const cef::TrainConfig tc = cef::train_config(config, task, seed);
      const cef::TrainResult result = cef::train(tc, [&](const cef::TrainLogRow& row) {
        if (row.step % 100 == 0 || row.step == tc.steps) {
          std::fprintf(stderr, "step %d loss %.6f (%.1fs)\n", row.step, row.loss, row.seconds);
        }
      });
      fs::create_directories(dir);
      const std::string stem = std::string(cef::to_string(task)) + "_seed" + std::to_string(seed);
      cef::save_checkpoint((dir / (stem + ".params")).string(), result.params);
      std::ofstream log(dir / (stem + "_log.csv"));
      cef::write_train_log(log, result.log);
      std::printf("%s\n", (dir / (stem + ".params")).string().c_str());
      return 0;
    }

    if (eval->parsed()) {
      const cef::TaskId task = config.tasks.front();
      const cef::TrainConfig tc = cef::train_config(config, task, seed);
      const cef::Model model(task, tc.model, cef::load_checkpoint(checkpoint));
      const auto traces = data.empty()
                              ? cef::sample_dataset(task, tc.eval_instances, seed, tc.eval_sizes)
                              : read_traces(data);
      const cef::EvalReport report = cef::evaluate(model, traces);
      fs::create_directories(dir);
      std::ofstream(dir / "eval.json") << cef::eval_report_json(report);
      std::printf("aggregate %.4f over %d instances\n", report.aggregate, report.instances);
      return 0;
    }

    if (run->parsed()) {
      cef::run_experiment(config, dir, jobs);
      std::printf("%s\n", dir.string().c_str());
      return 0;
    }

    if (sweep->parsed()) {
      if (!config.sweep) {
        std::cerr << config_path << ": config has no 'sweep' grid\n";
        return 2;
      }
      const auto result = cef::sweep_alpha(config, dir, jobs);
      std::printf("%zu cells written to %s\n", result.rows.size(), dir.string().c_str());
      return 0;
    }
  } catch (const cef::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const cef::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const cef::NonFiniteLoss& e) {
    std::cerr << "error: " << e.what() << '\n';
    const fs::path dump = fs::path(out.empty() ? "." : out) / "nonfinite_batch.json";
    std::ofstream(dump) << e.dump();
    std::cerr << "offending batch written to " << dump.string() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
