#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "srgnn/gradcheck.hpp"
#include "srgnn/readout.hpp"

namespace {

using Eigen::MatrixXd;
using srgnn::ItemId;
using srgnn::ModelConfig;
using srgnn::Tape;
using srgnn::Var;

ModelConfig cfg(int d) {
  ModelConfig c;
  c.dim = d;
  return c;
}

struct Fixture {
  Tape tape;
  srgnn::ParamVars params;
  srgnn::SessionGraph graph;
  Var states;

  Fixture(const srgnn::ModelParams& p, const std::vector<ItemId>& s, const MatrixXd& v)
      : params(srgnn::bind(tape, p, false)), graph(srgnn::build_session_graph(s)), states(tape.constant(v)) {}
};

TEST(LocalEmbedding, LastNodeOfExampleSession) {
  std::mt19937_64 rng(31);
  const auto p = oracle::random_params(rng, cfg(3), 6);
  const MatrixXd v = oracle::random_matrix(rng, 4, 3);
  Fixture f(p, {1, 2, 3, 2, 4}, v);
  EXPECT_EQ(srgnn::local_embedding(f.graph, f.states).value(), v.row(3));
}

TEST(LocalEmbedding, SingleItemSession) {
  std::mt19937_64 rng(32);
  const auto p = oracle::random_params(rng, cfg(3), 6);
  const MatrixXd v = oracle::random_matrix(rng, 1, 3);
  Fixture f(p, {5}, v);
  EXPECT_EQ(srgnn::local_embedding(f.graph, f.states).value(), v);
}

TEST(LocalEmbedding, RepeatedLastClickResolvesThroughAlias) {
  std::mt19937_64 rng(33);
  const auto p = oracle::random_params(rng, cfg(3), 6);
  const MatrixXd v = oracle::random_matrix(rng, 2, 3);
  Fixture f(p, {1, 2, 1}, v);
  EXPECT_EQ(srgnn::local_embedding(f.graph, f.states).value(), v.row(0));
}

TEST(Attention, ZeroQueryGivesZeroGlobal) {
  std::mt19937_64 rng(34);
  auto p = oracle::random_params(rng, cfg(4), 6);
  p.q.setZero();
  Fixture f(p, {0, 1, 2, 1}, oracle::random_matrix(rng, 3, 4));
  const auto att = srgnn::attention_global(f.graph, f.states, f.params);
  EXPECT_TRUE(att.alphas.value().isZero());
  EXPECT_TRUE(att.global.value().isZero());
}

TEST(Attention, HalfSaturatedWeightsAreConstant) {
  std::mt19937_64 rng(35);
  const int d = 4;
  auto p = oracle::random_params(rng, cfg(d), 6);
  p.w_1.setZero();
  p.w_2.setZero();
  p.c.setZero();
  p.q.setOnes();
  const MatrixXd v = oracle::random_matrix(rng, 3, d);
  Fixture f(p, {0, 1, 2}, v);
  const auto att = srgnn::attention_global(f.graph, f.states, f.params);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(att.alphas.value()(i, 0), d * 0.5);
  EXPECT_LT((att.global.value() - (d / 2.0) * v.colwise().sum()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Attention, MatchesScalarRecompute) {
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = oracle::random_params(rng, cfg(5), 8);
    const std::vector<ItemId> s = {3, 1, 7, 1, 2, 6};
    const MatrixXd v = oracle::random_matrix(rng, 5, 5);
    Fixture f(p, s, v);
    const auto att = srgnn::attention_global(f.graph, f.states, f.params);
    const auto want = oracle::attention(v, f.graph.last_node(), p);
    for (Eigen::Index i = 0; i < 5; ++i) EXPECT_NEAR(att.alphas.value()(i, 0), want.alpha[static_cast<std::size_t>(i)], 1e-14);
    for (Eigen::Index k = 0; k < 5; ++k) EXPECT_NEAR(att.global.value()(0, k), want.global[static_cast<std::size_t>(k)], 1e-13);
  }
}

TEST(Attention, NormalizedModeSumsToOne) {
  std::mt19937_64 rng(37);
  const auto p = oracle::random_params(rng, cfg(3), 6);
  Fixture f(p, {0, 1, 2, 3}, oracle::random_matrix(rng, 4, 3));
  const auto att = srgnn::attention_global(f.graph, f.states, f.params, true);
  EXPECT_NEAR(att.alphas.value().sum(), 1.0, 1e-12);
  EXPECT_GT(att.alphas.value().minCoeff(), 0.0);
}

TEST(AttentionProperty, NonLastPerturbationMovesOnlyItsOwnWeight) {
  std::mt19937_64 rng(38);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = oracle::random_params(rng, cfg(3), 6);
    const std::vector<ItemId> s = {0, 1, 2, 3};
    const MatrixXd v = oracle::random_matrix(rng, 4, 3);
    MatrixXd w = v;
    w.row(1) = oracle::random_matrix(rng, 1, 3);
    Fixture a(p, s, v), b(p, s, w);
    const MatrixXd alpha_a = srgnn::attention_global(a.graph, a.states, a.params).alphas.value();
    const MatrixXd alpha_b = srgnn::attention_global(b.graph, b.states, b.params).alphas.value();
    for (Eigen::Index i : {0, 2, 3}) EXPECT_EQ(alpha_a(i, 0), alpha_b(i, 0));
    EXPECT_NE(alpha_a(1, 0), alpha_b(1, 0));

    MatrixXd u = v;
    u.row(3) = oracle::random_matrix(rng, 1, 3);
    Fixture c(p, s, u);
    const MatrixXd alpha_c = srgnn::attention_global(c.graph, c.states, c.params).alphas.value();
    EXPECT_NE(alpha_a(0, 0), alpha_c(0, 0));
  }
}

TEST(Average, IdenticalRowsGiveThatRow) {
  Tape t;
  MatrixXd v(3, 2);
  v << 1, -2, 1, -2, 1, -2;
  EXPECT_LT((srgnn::average_global(t.constant(v)).value() - v.row(0)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Average, TwoRows) {
  Tape t;
  MatrixXd v(2, 3);
  v << 1, 2, 3, 5, 0, -1;
  MatrixXd want(1, 3);
  want << 3, 1, 1;
  EXPECT_EQ(srgnn::average_global(t.constant(v)).value(), want);
}

TEST(Average, MatchesSummationAndIgnoresOrder) {
  std::mt19937_64 rng(39);
  for (int trial = 0; trial < 50; ++trial) {
    const MatrixXd v = oracle::random_matrix(rng, 5, 4);
    std::vector<double> want(4, 0.0);
    for (int i = 0; i < 5; ++i)
      for (int k = 0; k < 4; ++k) want[static_cast<std::size_t>(k)] += v(i, k) / 5.0;
    Tape t;
    const MatrixXd got = srgnn::average_global(t.constant(v)).value();
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(got(0, k), want[static_cast<std::size_t>(k)], 1e-15);
    const MatrixXd reversed = v.colwise().reverse();
    EXPECT_LT((srgnn::average_global(t.constant(reversed)).value() - got).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Hybrid, ProjectionsRecoverEachHalf) {
  std::mt19937_64 rng(40);
  auto p = oracle::random_params(rng, cfg(3), 5);
  Tape t;
  const auto l = t.constant(oracle::random_matrix(rng, 1, 3));
  const auto g = t.constant(oracle::random_matrix(rng, 1, 3));
  p.w_3 << MatrixXd::Identity(3, 3), MatrixXd::Zero(3, 3);
  EXPECT_EQ(srgnn::hybrid_embedding(l, g, srgnn::bind(t, p, false)).value(), l.value());
  p.w_3 << MatrixXd::Zero(3, 3), MatrixXd::Identity(3, 3);
  EXPECT_EQ(srgnn::hybrid_embedding(l, g, srgnn::bind(t, p, false)).value(), g.value());
}

TEST(HybridProperty, IsLinear) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = oracle::random_params(rng, cfg(4), 5);
    Tape t;
    const auto pv = srgnn::bind(t, p, false);
    const MatrixXd x1 = oracle::random_matrix(rng, 1, 4), x2 = oracle::random_matrix(rng, 1, 4);
    const MatrixXd y1 = oracle::random_matrix(rng, 1, 4), y2 = oracle::random_matrix(rng, 1, 4);
    const double lambda = std::uniform_real_distribution<double>(-3, 3)(rng);
    auto f = [&](const MatrixXd& a, const MatrixXd& b) {
      return srgnn::hybrid_embedding(t.constant(a), t.constant(b), pv).value();
    };
    EXPECT_LT((f(lambda * x1, lambda * y1) - lambda * f(x1, y1)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((f(x1 + x2, y1 + y2) - f(x1, y1) - f(x2, y2)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SessionEmbedding, ModesSelectTheRightVector) {
  std::mt19937_64 rng(42);
  const auto p = oracle::random_params(rng, cfg(3), 6);
  const MatrixXd v = oracle::random_matrix(rng, 3, 3);
  Fixture f(p, {0, 1, 2}, v);
  const auto local = srgnn::session_embedding(f.graph, f.states, f.params, srgnn::ReadoutMode::Local);
  EXPECT_EQ(local.scoring.value(), v.row(2));
  EXPECT_FALSE(local.global.valid());

  const auto avg = srgnn::session_embedding(f.graph, f.states, f.params, srgnn::ReadoutMode::Average);
  MatrixXd cat(1, 6);
  cat << v.row(2), v.colwise().mean();
  EXPECT_LT((avg.scoring.value() - cat * p.w_3.transpose()).cwiseAbs().maxCoeff(), 1e-14);

  const auto att = srgnn::session_embedding(f.graph, f.states, f.params, srgnn::ReadoutMode::Attention);
  const auto hyb = srgnn::session_embedding(f.graph, f.states, f.params, srgnn::ReadoutMode::Hybrid);
  EXPECT_EQ(att.scoring.value(), hyb.scoring.value());
  EXPECT_TRUE(hyb.alphas.valid());
}

TEST(AttentionGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(43);
  const auto p = oracle::random_params(rng, cfg(4), 5);
  const std::vector<ItemId> s = {0, 3, 1, 3, 2};
  const MatrixXd weights = oracle::random_matrix(rng, 1, 4);
  std::vector<MatrixXd> inputs = {oracle::random_matrix(rng, 4, 4), p.q, p.w_1, p.w_2, p.c};
  const auto g = srgnn::build_session_graph(s);
  auto report = srgnn::ad::finite_diff_check<double>(
      [&](Tape& t, const std::vector<Var>& vars) {
        srgnn::ParamVars pv;
        pv.q = vars[1];
        pv.w_1 = vars[2];
        pv.w_2 = vars[3];
        pv.c = vars[4];
        const auto att = srgnn::attention_global(g, vars[0], pv);
        return srgnn::ad::sum(srgnn::ad::hadamard(att.global, t.constant(weights)));
      },
      inputs, 1e-5);
  EXPECT_LT(report.max_rel_error, 1e-4) << "tensor " << report.param;
}

}  // namespace
