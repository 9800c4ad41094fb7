// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "cef/numerics.hpp"
#include "cef/preprocessor.hpp"
#include "fd.hpp"

namespace cef {
namespace {

using testing::random_matrix;

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index j = 0;
  for (double x : v) {
    m(0, j++) = x;
  }
  return m;
}

std::size_t add_fixed(ParamStore& p, const std::string& name, Matrix w, double bias = 0.0) {
  const auto rows = w.rows();
  return p.add(ParamGroup{name, std::move(w), Vector::Constant(rows, bias)});
}

TEST(GnnGate, ColdStartKeepsLatent) {
  ParamStore p;
  Rng rng(1);
  const auto g = p.add("gate", 1, 3, rng);
  Tape t(p);
  const Matrix latent = random_matrix(rng, 4, 3);
  const auto r = gnn_gate(t, t.constant(latent), t.zeros(4, 3), g);
  EXPECT_EQ(t.value(r.alpha).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(t.value(r.enhanced) == latent);
  EXPECT_TRUE(t.value(r.context_next) == latent);
}

TEST(GnnGate, NegativeLogitGivesExactlyZero) {
  ParamStore p;
  const auto g = add_fixed(p, "gate", row({-1.0, -2.0}));
  Tape t(p);
  const auto r = gnn_gate(t, t.constant(row({0.3, 0.4})), t.constant(row({1.0, 0.5})), g);
  EXPECT_EQ(t.value(r.alpha)(0, 0), 0.0);
  EXPECT_TRUE(t.value(r.enhanced) == row({0.3, 0.4}));
}

TEST(GnnGate, LogitFive) {
  ParamStore p;
  const auto g = add_fixed(p, "gate", row({5.0, 0.0}));
  Tape t(p);
  const Matrix c = row({1.0, -1.0});
  const Matrix l = row({0.0, 2.0});
  const auto r = gnn_gate(t, t.constant(l), t.constant(c), g);
  const double a = std::tanh(5.0);
  EXPECT_NEAR(t.value(r.alpha)(0, 0), a, 1e-15);
  EXPECT_NEAR(a, 0.99991, 1e-5);
  for (int j = 0; j < 2; ++j) {
    EXPECT_NEAR(t.value(r.enhanced)(0, j), c(0, j) + (1 - a) * (l(0, j) - c(0, j)), 1e-14);
  }
  EXPECT_TRUE(t.value(r.enhanced) == t.value(r.context_next));
}

TEST(TransformerGate, ColdStartHalves) {
  ParamStore p;
  Rng rng(2);
  const auto g = p.add("gate", 1, 4, rng);
  Tape t(p);
  const Matrix l = random_matrix(rng, 3, 2);
  const Matrix h = random_matrix(rng, 3, 2);
  const auto r = transformer_gate(t, t.constant(l), t.constant(h), t.zeros(3, 4), g);
  EXPECT_EQ(t.value(r.alpha)(1, 0), 0.5);
  Matrix z(3, 4);
  z << l, h;
  EXPECT_TRUE(t.value(r.enhanced) == z);
  EXPECT_NEAR((t.value(r.context_next) - z / 2).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(TransformerGate, SaturatedRetainsContext) {
  ParamStore p;
  const auto g = add_fixed(p, "gate", row({0.0, 0.0}), 40.0);
  Tape t(p);
  const Matrix c = row({0.7, -0.2});
  const auto r = transformer_gate(t, t.constant(row({3.0})), t.constant(row({-3.0})),
                                  t.constant(c), g);
  EXPECT_NEAR((t.value(r.context_next) - c).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(TransformerGate, HandCase) {
  ParamStore p;
  const auto g = add_fixed(p, "gate", row({1.0, 0.0}));
  Tape t(p);
  const auto r = transformer_gate(t, t.constant(row({1.0})), t.constant(row({0.0})),
                                  t.constant(row({2.0, 2.0})), g);
  const double a = 1.0 / (1.0 + std::exp(-2.0));
  EXPECT_NEAR(t.value(r.alpha)(0, 0), a, 1e-15);
  EXPECT_NEAR(a, 0.8808, 1e-4);
  EXPECT_NEAR(t.value(r.context_next)(0, 0), 2 * a + (1 - a), 1e-14);
  EXPECT_NEAR(t.value(r.context_next)(0, 0), 1.8808, 1e-4);
  EXPECT_NEAR(t.value(r.context_next)(0, 1), 1.7616, 1e-4);
}

TEST(Gates, ShapeMismatch) {
  ParamStore p;
  Rng rng(3);
  const auto g = p.add("gate", 1, 3, rng);
  Tape t(p);
  EXPECT_THROW(gnn_gate(t, t.zeros(2, 3), t.zeros(3, 3), g), ShapeError);
  EXPECT_THROW(transformer_gate(t, t.zeros(2, 1), t.zeros(2, 1), t.zeros(2, 3), g), ShapeError);
}

TEST(GateRanges, TenThousandRandomInputs) {
  Rng rng(4);
  ParamStore p;
  const auto gg = p.add("g", 1, 8, rng);
  const auto tg = p.add("t", 1, 16, rng);
  p[gg].weights *= 20.0;
  p[tg].weights *= 6.0;
  p[gg].bias(0) = 0.3;
  p[tg].bias(0) = -0.2;
  Tape t(p);
  const int rows = 10000;
  const Matrix ctx = random_matrix(rng, rows, 8, 3.0);
  const auto a = gnn_gate(t, t.constant(random_matrix(rng, rows, 8)), t.constant(ctx), gg);
  const auto b = transformer_gate(t, t.constant(random_matrix(rng, rows, 8)),
                                  t.constant(random_matrix(rng, rows, 8)),
                                  t.constant(random_matrix(rng, rows, 16, 3.0)), tg);
  const Matrix x = t.value(a.alpha);
  const Matrix y = t.value(b.alpha);
  EXPECT_GE(x.minCoeff(), 0.0);
  EXPECT_GT(x.maxCoeff(), 0.0);
  EXPECT_LE(x.maxCoeff(), 1.0);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double logit = (p[gg].weights * ctx.row(i).transpose())(0) + p[gg].bias(0);
    // tanh only rounds to exactly one above ~19.1.
    if (logit < 19.0) {
      EXPECT_LT(x(i, 0), 1.0) << logit;
    }
  }
  EXPECT_GT(y.minCoeff(), 0.0);
  EXPECT_LT(y.maxCoeff(), 1.0);
}

TEST(GateConvexity, ContextNeverBlowsUp) {
  Rng rng(5);
  ParamStore p;
  const auto gg = p.add("g", 1, 6, rng);
  const auto tg = p.add("t", 1, 12, rng);
  Tape t(p);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix l = random_matrix(rng, 5, 6, 4.0);
    const Matrix h = random_matrix(rng, 5, 6, 2.0);
    const Matrix c = random_matrix(rng, 5, 6, 3.0);
    const Matrix c2 = random_matrix(rng, 5, 12, 3.0);
    const auto a = gnn_gate(t, t.constant(l), t.constant(c), gg);
    const double bound = std::max(l.cwiseAbs().maxCoeff(), c.cwiseAbs().maxCoeff());
    EXPECT_LE(t.value(a.context_next).cwiseAbs().maxCoeff(), bound + 1e-12);
    const auto b = transformer_gate(t, t.constant(l), t.constant(h), t.constant(c2), tg);
    const double bound2 = std::max({l.cwiseAbs().maxCoeff(), h.cwiseAbs().maxCoeff(),
                                    c2.cwiseAbs().maxCoeff()});
    EXPECT_LE(t.value(b.context_next).cwiseAbs().maxCoeff(), bound2 + 1e-12);
  }
}

TEST(FixedGate, Examples) {
  ParamStore p;
  Tape t(p);
  const Matrix l = row({0.25, -4.0});
  const auto zero = fixed_gate(t, t.constant(l), t.constant(row({9.0, 9.0})), 0.0);
  EXPECT_TRUE(t.value(zero.enhanced) == l);
  EXPECT_TRUE(t.value(zero.context_next) == l);

  Var c = t.zeros(1, 2);
  for (int step = 0; step < 5; ++step) {
    const auto one = fixed_gate(t, t.constant(row({1.0, 2.0})), c, 1.0);
    c = one.context_next;
    EXPECT_EQ(t.value(one.enhanced).cwiseAbs().maxCoeff(), 0.0);
  }
  EXPECT_EQ(t.value(c).cwiseAbs().maxCoeff(), 0.0);

  const auto half = fixed_gate(t, t.constant(row({0.0})), t.constant(row({2.0})), 0.5);
  EXPECT_EQ(t.value(half.enhanced)(0, 0), 1.0);
  EXPECT_EQ(t.value(half.context_next)(0, 0), 1.0);
}

TEST(FixedGate, OutOfRange) {
  ParamStore p;
  Tape t(p);
  EXPECT_THROW(fixed_gate(t, t.zeros(1, 1), t.zeros(1, 1), 1.5), DomainError);
  EXPECT_THROW(fixed_gate(t, t.zeros(1, 1), t.zeros(1, 1), -0.1), DomainError);
  EXPECT_THROW(fixed_gate(t, t.zeros(1, 1), t.zeros(1, 1), std::nan("")), DomainError);
}

AttentionGroups attention_params(ParamStore& p, int d, Rng& rng) {
  return {p.add("q", d, d, rng), p.add("k", d, d, rng), p.add("v", d, d, rng)};
}

TEST(Attention, SingleEntryWeightOne) {
  Rng rng(6);
  ParamStore p;
  const auto g = attention_params(p, 3, rng);
  Tape t(p);
  const Matrix entry = random_matrix(rng, 4, 3);
  const Var hist[] = {t.constant(entry)};
  const auto r = attention_enhance(t, t.constant(random_matrix(rng, 4, 3)), hist, g);
  EXPECT_EQ(t.value(r.weights).cols(), 1);
  EXPECT_EQ(t.value(r.weights).minCoeff(), 1.0);
  const Matrix expected = entry * p[g.value].weights.transpose();
  EXPECT_NEAR((t.value(r.enhanced) - expected).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(Attention, IdenticalEntriesSplitEvenly) {
  Rng rng(7);
  ParamStore p;
  const auto g = attention_params(p, 3, rng);
  Tape t(p);
  const Var e = t.constant(random_matrix(rng, 2, 3));
  const Var hist[] = {e, e};
  const auto r = attention_enhance(t, t.constant(random_matrix(rng, 2, 3)), hist, g);
  EXPECT_NEAR((t.value(r.weights).array() - 0.5).abs().maxCoeff(), 0.0, 1e-15);
}

TEST(Attention, EmptyHistoryAttendsToSelf) {
  Rng rng(8);
  ParamStore p;
  const auto g = attention_params(p, 4, rng);
  Tape t(p);
  const Matrix l = random_matrix(rng, 3, 4);
  const auto r = attention_enhance(t, t.constant(l), {}, g);
  EXPECT_EQ(t.value(r.weights).minCoeff(), 1.0);
  const Matrix expected = l * p[g.value].weights.transpose();
  EXPECT_NEAR((t.value(r.enhanced) - expected).cwiseAbs().maxCoeff(), 0.0, 1e-15);
  ASSERT_EQ(r.history.size(), 1u);
}

TEST(Attention, HistoryGrowsByOnePerStep) {
  Rng rng(9);
  ParamStore p;
  const auto g = attention_params(p, 2, rng);
  Tape t(p);
  std::vector<Var> history;
  for (int step = 1; step <= 12; ++step) {
    const Var l = t.constant(random_matrix(rng, 5, 2));
    auto r = attention_enhance(t, l, history, g);
    EXPECT_EQ(r.history.size(), static_cast<std::size_t>(step));
    EXPECT_EQ(r.history.front().id, l.id);
    history = std::move(r.history);
  }
}

TEST(Attention, WeightsNormalizedAndOutputInHull) {
  Rng rng(10);
  ParamStore p;
  const auto g = attention_params(p, 3, rng);
  p[g.query].weights *= 5.0;
  Tape t(p);
  int rows_checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Var> hist;
    std::vector<Matrix> values;
    const int len = 1 + trial % 6;
    for (int j = 0; j < len; ++j) {
      const Matrix e = random_matrix(rng, 256, 3, 2.0);
      hist.push_back(t.constant(e));
      values.push_back(e * p[g.value].weights.transpose());
    }
    const auto r = attention_enhance(t, t.constant(random_matrix(rng, 256, 3, 2.0)), hist, g);
    const Matrix w = t.value(r.weights);
    const Matrix s = t.value(r.enhanced);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      EXPECT_NEAR(w.row(i).sum(), 1.0, 1e-9);
      EXPECT_GT(w.row(i).minCoeff(), 0.0);
      for (Eigen::Index c = 0; c < 3; ++c) {
        double lo = values[0](i, c), hi = lo;
        for (const auto& v : values) {
          lo = std::min(lo, v(i, c));
          hi = std::max(hi, v(i, c));
        }
        EXPECT_GE(s(i, c), lo - 1e-12);
        EXPECT_LE(s(i, c), hi + 1e-12);
      }
      ++rows_checked;
    }
  }
  EXPECT_GE(rows_checked, 10000);
}

TEST(GateGradients, FiniteDifferences) {
  Rng rng(11);
  ParamStore p;
  const auto enc = p.add("enc", 3, 2, rng);
  const auto gg = p.add("gnn_gate", 1, 3, rng);
  const auto tg = p.add("rt_gate", 1, 6, rng);
  const auto att = attention_params(p, 3, rng);
  p[gg].bias(0) = 0.4;  // keep the relu away from its kink
  const Matrix x1 = random_matrix(rng, 4, 2);
  const Matrix x2 = random_matrix(rng, 4, 2);
  const Matrix c0 = random_matrix(rng, 4, 3);
  const Matrix c6 = random_matrix(rng, 4, 6);
  auto loss = [&](Tape& t) {
    const Var l1 = t.linear(t.constant(x1), enc);
    const Var l2 = t.tanh(t.linear(t.constant(x2), enc));
    const auto a = gnn_gate(t, l1, t.add(t.constant(c0), l2), gg);
    const auto b = transformer_gate(t, l1, l2, t.constant(c6), tg);
    const auto s = gnn_gate(t, l2, t.constant(c0), gg, ForgetActivation::Sigmoid);
    const Var hist[] = {l2, a.enhanced};
    const auto c = attention_enhance(t, l1, hist, att);
    const auto f = fixed_gate(t, l1, l2, 0.3);
    const Var parts[] = {testing::random_projection(t, a.enhanced, 1),
                         testing::random_projection(t, b.context_next, 2),
                         testing::random_projection(t, s.enhanced, 3),
                         testing::random_projection(t, c.enhanced, 4),
                         testing::random_projection(t, f.context_next, 5)};
    return t.sum(parts);
  };
  const auto r = testing::check_gradients(loss, p);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

}  // namespace
}  // namespace cef
