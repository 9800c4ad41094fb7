// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cef/graph.hpp"
#include "cef/rng.hpp"
#include "cef/trace.hpp"

namespace cef {

enum class TaskId { Bfs, BellmanFord, InsertionSort, Minimum, BinarySearch, MstPrim };

inline constexpr TaskId kAllTasks[] = {TaskId::Bfs,          TaskId::BellmanFord,
                                       TaskId::InsertionSort, TaskId::Minimum,
                                       TaskId::BinarySearch,  TaskId::MstPrim};

std::string_view to_string(TaskId id);
std::optional<TaskId> parse_task(std::string_view name);

/// Instance sampler knobs. Sizes are drawn uniformly from [n_min, n_max].
struct SamplerParams {
  int n_min = 4;
  int n_max = 8;
  double edge_probability = 0.5;
  double weight_min = 0.05;
  double weight_max = 1.0;
};

struct TaskSpec {
  TaskId id;
  std::vector<ProbeSpec> probes;
  SamplerParams sampler;
};

/// Fixed probe layout of each task (documented in docs/tasks.md).
const TaskSpec& task_spec(TaskId id);

// Generators. Each returns a trace whose hints[t-1] is the algorithm state
// after reasoning step t. All scalar features are normalized to [0, 1].
// Edge weights are dense row-major n x n matrices (zero off the graph).

Trace gen_bfs(const Graph& g, int source);
/// Throws DomainError if some node is unreachable from source or a weight on
/// an edge is not positive.
Trace gen_bellman_ford(const Graph& g, std::span<const double> weights, int source);
/// Throws DomainError on duplicate keys.
Trace gen_insertion_sort(std::span<const double> keys);
/// Throws DomainError on duplicate keys.
Trace gen_minimum(std::span<const double> keys);
/// Throws DomainError unless keys are strictly increasing and target lies
/// within [keys.front(), keys.back()].
Trace gen_binary_search(std::span<const double> sorted_keys, double target);
/// Throws DomainError on a disconnected or directed graph, non-positive or
/// repeated weights.
Trace gen_mst_prim(const Graph& g, std::span<const double> weights, int source);

/// Draws one instance of `id` with n nodes and runs its generator.
Trace sample_trace(TaskId id, int n, Rng& rng, const SamplerParams& params);
/// Draws n uniformly from the params range first.
Trace sample_trace(TaskId id, Rng& rng, const SamplerParams& params);

/// Undirected ER graph made connected by linking each extra component to an
/// earlier one with a single random edge.
Graph connected_random_graph(int n, double p, Rng& rng);

}  // namespace cef
