// SPDX-License-Identifier: Apache-2.0
#include <vector>

#include <benchmark/benchmark.h>

#include "cef/pipeline.hpp"
#include "cef/train.hpp"

namespace {

using namespace cef;

struct Fixture {
  Model model;
  std::vector<Trace> traces;
  std::vector<const Trace*> ptrs;

  Fixture(TaskId task, ProcessorType p, GateVariant g, int batch, int n)
      : model(task, [&] {
          ModelConfig c;
          c.processor = p;
          c.gate.variant = g;
          return c;
        }(), 1) {
    Rng rng(2);
    for (int i = 0; i < batch; ++i) traces.push_back(sample_trace(task, n, rng, {}));
    for (const auto& t : traces) ptrs.push_back(&t);
  }
};

void teacher_forced_step(benchmark::State& state, ProcessorType p, GateVariant g, int batch) {
  Fixture f(TaskId::BellmanFord, p, g, batch, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Tape t(f.model.params());
    const auto r = rollout_batch(t, f.model, f.ptrs, true, true);
    t.backward(r.loss);
    benchmark::DoNotOptimize(t.gradients().weights.data());
  }
  state.counters["rollout_steps"] = f.traces.front().T;
}

void free_running_eval(benchmark::State& state, ProcessorType p, GateVariant g) {
  Fixture f(TaskId::Bfs, p, g, 32, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Tape t(f.model.params());
    benchmark::DoNotOptimize(rollout_batch(t, f.model, f.ptrs, false, false).outputs);
  }
}

void gate_only(benchmark::State& state, ForgetActivation a) {
  Rng rng(3);
  ParamStore p;
  const auto g = p.add("gate", 1, 64, rng);
  const Matrix latent = Matrix::Random(state.range(0), 64);
  const Matrix context = Matrix::Random(state.range(0), 64);
  for (auto _ : state) {
    Tape t(p);
    benchmark::DoNotOptimize(gnn_gate(t, t.constant(latent), t.constant(context), g, a).enhanced);
  }
}

BENCHMARK_CAPTURE(teacher_forced_step, gmpnn, ProcessorType::Gnn, GateVariant::None, 32)
    ->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(teacher_forced_step, cef_gmpnn, ProcessorType::Gnn, GateVariant::GnnTanhRelu, 32)
    ->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(teacher_forced_step, cef_gmpnn_attention, ProcessorType::Gnn,
                  GateVariant::Attention, 32)
    ->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(teacher_forced_step, rt, ProcessorType::Transformer, GateVariant::None, 4)
    ->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(teacher_forced_step, cef_rt, ProcessorType::CefTransformer,
                  GateVariant::TransformerSigmoid, 4)
    ->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(free_running_eval, gmpnn, ProcessorType::Gnn, GateVariant::None)
    ->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(free_running_eval, cef_gmpnn, ProcessorType::Gnn, GateVariant::GnnTanhRelu)
    ->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(gate_only, tanh_relu, ForgetActivation::TanhRelu)->Arg(256)->Arg(4096);
BENCHMARK_CAPTURE(gate_only, sigmoid, ForgetActivation::Sigmoid)->Arg(256)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
