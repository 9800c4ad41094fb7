// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "cef/numerics.hpp"
#include "cef/graph.hpp"
#include "cef/tasks.hpp"
#include "cef/trace.hpp"
#include "cef/trace_json.hpp"

namespace cef {
namespace {

TEST(RandomGraph, CompleteUndirectedCount) {
  const Graph g = random_graph(4, 1.0, 1, true);
  EXPECT_EQ(g.edge_count(), 12);
  EXPECT_TRUE(g.is_symmetric());
}

TEST(RandomGraph, EmptyAtZeroProbability) {
  EXPECT_EQ(random_graph(6, 0.0, 1, true).edge_count(), 0);
  EXPECT_EQ(random_graph(6, 0.0, 1, false).edge_count(), 0);
}

TEST(RandomGraph, DeterministicPerSeed) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    EXPECT_EQ(random_graph(9, 0.4, s, true), random_graph(9, 0.4, s, true));
    EXPECT_EQ(random_graph(9, 0.4, s, false), random_graph(9, 0.4, s, false));
  }
}

TEST(RandomGraph, RejectsBadArguments) {
  EXPECT_THROW(random_graph(0, 0.5, 1, true), DomainError);
  EXPECT_THROW(random_graph(3, 1.5, 1, true), DomainError);
}

TEST(Graph, AdjacencyMatchesEdgeList) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Graph g = random_graph(7, 0.3, s, s % 2 == 0);
    int live = 0;
    for (int u = 0; u < g.n(); ++u) {
      EXPECT_FALSE(g.has_edge(u, u));
      for (int v = 0; v < g.n(); ++v) {
        live += g.has_edge(u, v) ? 1 : 0;
      }
      for (int v : g.neighbors(u)) {
        EXPECT_TRUE(g.has_edge(u, v));
      }
    }
    EXPECT_EQ(live, g.edge_count());
  }
}

TEST(Graph, RejectsSelfLoopsAndDuplicates) {
  EXPECT_THROW(Graph::from_edges(3, {{1, 1}}), DomainError);
  EXPECT_THROW(Graph::from_edges(3, {{0, 1}, {0, 1}}), DomainError);
  EXPECT_THROW(Graph::from_edges(3, {{0, 3}}), DomainError);
}

TEST(ValidateTrace, GeneratorOutputIsValid) {
  Rng rng(21);
  for (TaskId id : kAllTasks) {
    for (int i = 0; i < 100; ++i) {
      const Trace t = sample_trace(id, rng, SamplerParams{1, 10});
      EXPECT_TRUE(validate_trace(t).empty()) << to_string(id) << ": " << validate_trace(t).front();
    }
  }
}

TEST(ValidateTrace, NodeIndexOutOfRange) {
  Rng rng(3);
  Trace t = sample_trace(TaskId::Bfs, 5, rng, {});
  t.outputs.index["pi"][2] = 5;
  EXPECT_EQ(validate_trace(t).size(), 1u);
}

TEST(ValidateTrace, HintCountDisagreesWithT) {
  const Graph g = Graph::from_edges(4, {{0, 1}, {1, 0}, {1, 2}, {2, 1}, {2, 3}, {3, 2}});
  Trace t = gen_bfs(g, 0);
  ASSERT_EQ(t.T, 3);
  t.hints.pop_back();
  EXPECT_EQ(validate_trace(t).size(), 1u);
}

TEST(ValidateTrace, NonBinaryMask) {
  Rng rng(4);
  Trace t = sample_trace(TaskId::Bfs, 4, rng, {});
  t.hints[0].real["reach"][1] = 0.5;
  EXPECT_EQ(validate_trace(t).size(), 1u);
}

TEST(TraceJson, RoundTripsEveryTask) {
  Rng rng(31);
  for (TaskId id : kAllTasks) {
    for (int i = 0; i < 25; ++i) {
      const Trace t = sample_trace(id, rng, SamplerParams{1, 9});
      const Trace back = trace_from_json(trace_to_json(t));
      EXPECT_EQ(back, t);
      EXPECT_EQ(back.graph.adjacency(), t.graph.adjacency());
    }
  }
}

TEST(TraceJson, RejectsMalformed) {
  EXPECT_THROW(trace_from_json("{"), std::exception);
  EXPECT_THROW(trace_from_json(R"({"task":"bfs","n":2})"), std::exception);
}

}  // namespace
}  // namespace cef
