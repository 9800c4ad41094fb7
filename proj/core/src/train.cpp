// SPDX-License-Identifier: Apache-2.0
#include "cef/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "cef/trace_json.hpp"

namespace cef {

TrainConfig TrainConfig::defaults(TaskId task, ProcessorType processor) {
  TrainConfig c;
  c.task = task;
  c.model.processor = processor;
  if (processor == ProcessorType::CefTransformer) {
    c.model.gate.variant = GateVariant::TransformerSigmoid;
  }
  if (processor != ProcessorType::Gnn) {
    c.batch_size = 4;
    c.learning_rate = 2.5e-4;
  }
  return c;
}

void validate(const TrainConfig& c) {
  validate(c.model);
  if (c.batch_size < 1) {
    throw DomainError("batch_size must be at least 1");
  }
  if (c.steps < 0) {
    throw DomainError("steps must be non-negative");
  }
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) {
    throw DomainError("learning_rate must be finite and non-negative");
  }
  if (c.eval_instances < 1) {
    throw DomainError("eval_instances must be at least 1");
  }
  if (!(c.clip_norm >= 0.0)) {
    throw DomainError("clip_norm must be non-negative");
  }
  for (const SamplerParams* s : {&c.train_sizes, &c.eval_sizes}) {
    if (s->n_min < 1 || s->n_max < s->n_min) {
      throw DomainError("size range [" + std::to_string(s->n_min) + ", " +
                        std::to_string(s->n_max) + "] is empty");
    }
    if (!(s->edge_probability > 0.0 && s->edge_probability <= 1.0)) {
      throw DomainError("edge_probability must lie in (0, 1]");
    }
    if (!(s->weight_min > 0.0 && s->weight_max > s->weight_min)) {
      throw DomainError("weight range must satisfy 0 < weight_min < weight_max");
    }
  }
}

NonFiniteLoss::NonFiniteLoss(int step, std::string dump)
    : std::runtime_error("non-finite loss at step " + std::to_string(step)),
      step_(step),
      dump_(std::move(dump)) {}

namespace {

using Clock = std::chrono::steady_clock;

std::string dump_batch(std::span<const Trace* const> batch) {
  std::string out = "[";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out += i == 0 ? "\n" : ",\n";
    out += trace_to_json(*batch[i]);
  }
  out += "\n]\n";
  return out;
}

template <typename NextBatch>
TrainResult train_loop(const TrainConfig& config, NextBatch next_batch,
                       const TrainProgress& progress) {
  validate(config);
  const auto start = Clock::now();
  Model model(config.task, config.model, derive_seed(config.seed, 0));
  OptimizerState opt = OptimizerState::for_params(model.params());
  const AdamConfig adam{config.learning_rate};
  TrainResult result;
  result.log.reserve(static_cast<std::size_t>(config.steps));
  for (int step = 1; step <= config.steps; ++step) {
    const std::vector<const Trace*> batch = next_batch();
    Tape tape(model.params());
    const BatchRollout r = rollout_batch(tape, model, batch, true, true);
    const double loss = tape.scalar(r.loss);
    if (!std::isfinite(loss)) {
      throw NonFiniteLoss(step, dump_batch(batch));
    }
    tape.backward(r.loss);
    Gradients grads = tape.take_gradients();
    if (config.clip_norm > 0.0) {
      const double norm = std::sqrt(grads.squared_norm());
      if (norm > config.clip_norm) {
        grads.scale(config.clip_norm / norm);
      }
    }
    adam_step(model.params(), grads, opt, adam);
    TrainLogRow row{step, loss, std::chrono::duration<double>(Clock::now() - start).count()};
    result.log.push_back(row);
    if (progress) {
      progress(row);
    }
  }
  result.params = model.params();
  result.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

}  // namespace

TrainResult train(const TrainConfig& config, const TrainProgress& progress) {
  Rng rng(derive_seed(config.seed, 1));
  std::vector<Trace> storage;
  return train_loop(
      config,
      [&] {
        storage.clear();
        for (int i = 0; i < config.batch_size; ++i) {
          storage.push_back(sample_trace(config.task, rng, config.train_sizes));
        }
        std::vector<const Trace*> out;
        for (const auto& t : storage) {
          out.push_back(&t);
        }
        return out;
      },
      progress);
}

TrainResult train_on(const TrainConfig& config, std::span<const Trace> dataset,
                     const TrainProgress& progress) {
  if (dataset.empty()) {
    throw ContractError("train_on: empty dataset");
  }
  std::size_t cursor = 0;
  return train_loop(
      config,
      [&] {
        std::vector<const Trace*> out;
        const auto count = std::min(dataset.size(), static_cast<std::size_t>(config.batch_size));
        for (std::size_t i = 0; i < count; ++i) {
          out.push_back(&dataset[cursor]);
          cursor = (cursor + 1) % dataset.size();
        }
        return out;
      },
      progress);
}

void write_train_log(std::ostream& out, std::span<const TrainLogRow> log) {
  out << "step,loss,seconds\n";
  char buf[96];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.6f\n", row.step, row.loss, row.seconds);
    out << buf;
  }
}

std::vector<TrainLogRow> read_train_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "step,loss,seconds") {
    throw ContractError("training log: missing 'step,loss,seconds' header");
  }
  std::vector<TrainLogRow> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    TrainLogRow row;
    char c1 = 0;
    char c2 = 0;
    std::istringstream ss(line);
    if (!(ss >> row.step >> c1 >> row.loss >> c2 >> row.seconds) || c1 != ',' || c2 != ',') {
      throw ContractError("training log line " + std::to_string(lineno) + ": malformed row");
    }
    out.push_back(row);
  }
  return out;
}

}  // namespace cef
