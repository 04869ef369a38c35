#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "srgnn/errors.hpp"
#include "srgnn/ggnn.hpp"
#include "srgnn/gradcheck.hpp"

namespace {

using Eigen::MatrixXd;
using srgnn::ItemId;
using srgnn::ModelConfig;
using srgnn::ModelParams;
using srgnn::Tape;
using srgnn::Var;

ModelConfig config_d(int d, srgnn::ConnectionScheme scheme = srgnn::ConnectionScheme::Standard) {
  ModelConfig c;
  c.dim = d;
  c.connection = scheme;
  return c;
}

MatrixXd run(const ModelParams& p, const std::vector<ItemId>& s, int steps,
             srgnn::ConnectionScheme scheme = srgnn::ConnectionScheme::Standard) {
  Tape t;
  const auto pv = srgnn::bind(t, p, false);
  const auto g = srgnn::build_session_graph(s);
  const auto adj = srgnn::adjacency_constants(t, srgnn::connection_matrix(g, s, scheme));
  return srgnn::propagate(t, g, adj, pv, steps).value();
}

MatrixXd initial(const ModelParams& p, const std::vector<ItemId>& s) {
  const auto g = srgnn::build_session_graph(s);
  MatrixXd v(g.size(), p.embedding.cols());
  for (Eigen::Index i = 0; i < g.size(); ++i) v.row(i) = p.embedding.row(g.nodes[static_cast<std::size_t>(i)]);
  return v;
}

TEST(InitStates, LooksUpEmbeddingRows) {
  std::mt19937_64 rng(21);
  const auto p = oracle::random_params(rng, config_d(3), 9);
  Tape t;
  const auto pv = srgnn::bind(t, p, false);
  const auto g = srgnn::build_session_graph(std::vector<ItemId>{3, 7, 3});
  const auto v = srgnn::init_states(t, g, pv).value();
  ASSERT_EQ(v.rows(), 2);
  EXPECT_EQ(v.row(0), p.embedding.row(3));
  EXPECT_EQ(v.row(1), p.embedding.row(7));
}

TEST(InitStates, ZeroTableGivesZeroStates) {
  const auto p = srgnn::zero_params(config_d(4), 6);
  Tape t;
  const auto pv = srgnn::bind(t, p, false);
  const auto g = srgnn::build_session_graph(std::vector<ItemId>{1, 2, 5});
  EXPECT_TRUE(srgnn::init_states(t, g, pv).value().isZero());
}

TEST(InitStates, UnknownItemIsACatalogError) {
  const auto p = srgnn::zero_params(config_d(2), 4);
  Tape t;
  const auto pv = srgnn::bind(t, p, false);
  const auto g = srgnn::build_session_graph(std::vector<ItemId>{1, 4});
  EXPECT_THROW(srgnn::init_states(t, g, pv), srgnn::CatalogError);
}

TEST(PropagateStep, IsolatedNodeMatchesScalarGru) {
  std::mt19937_64 rng(22);
  auto p = oracle::random_params(rng, config_d(1), 3);
  p.b_out.setZero();
  p.b_in.setZero();
  const double v = p.embedding(2, 0);
  const double z = 1.0 / (1.0 + std::exp(-p.u_z(0, 0) * v));
  const double r = 1.0 / (1.0 + std::exp(-p.u_r(0, 0) * v));
  const double c = std::tanh(p.u_o(0, 0) * r * v);
  const double want = (1 - z) * v + z * c;
  const auto got = run(p, {2}, 1);
  EXPECT_NEAR(got(0, 0), want, 1e-15);
}

TEST(PropagateStep, ClosedUpdateGateKeepsStates) {
  std::mt19937_64 rng(23);
  auto p = oracle::random_params(rng, config_d(4), 6);
  p.embedding = oracle::random_matrix(rng, 6, 4, 0.5, 1.0);
  p.w_z.setZero();
  p.u_z.setConstant(-50.0);
  const std::vector<ItemId> s = {0, 3, 5, 3, 1};
  const MatrixXd before = initial(p, s);
  EXPECT_LT((run(p, s, 1) - before).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(PropagateStep, SmallIntegerParamsMatchStraightLineRecompute) {
  ModelParams p = srgnn::zero_params(config_d(2), 3);
  int k = 0;
  const int pattern[] = {1, -1, 2, 0, -2, 1, 1, 0, -1};
  p.for_each([&](std::string_view, MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = pattern[k++ % 9];
  });
  const std::vector<ItemId> s = {1, 2};
  const auto adj = oracle::brute_adjacency(s);
  const auto want = oracle::ggnn_step({adj.out, adj.in}, initial(p, s), p);
  EXPECT_LT((run(p, s, 1) - want.states).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(PropagateStep, ExampleSessionMatchesRecompute) {
  std::mt19937_64 rng(24);
  const auto p = oracle::random_params(rng, config_d(5), 6);
  const std::vector<ItemId> s = {1, 2, 3, 2, 4};
  const auto adj = oracle::brute_adjacency(s);
  const MatrixXd v0 = initial(p, s);
  const auto step1 = oracle::ggnn_step({adj.out, adj.in}, v0, p);
  EXPECT_LT((run(p, s, 1) - step1.states).cwiseAbs().maxCoeff(), 1e-14);
  const auto step2 = oracle::ggnn_step({adj.out, adj.in}, step1.states, p);
  EXPECT_LT((run(p, s, 2) - step2.states).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(PropagateStep, FullConnectionMatchesRecompute) {
  std::mt19937_64 rng(25);
  const auto cfg = config_d(3, srgnn::ConnectionScheme::FC);
  const auto p = oracle::random_params(rng, cfg, 6);
  const std::vector<ItemId> s = {4, 1, 2, 1, 5};
  const auto adj = oracle::brute_adjacency(s);
  const MatrixXd reach = oracle::brute_reach(s, adj.nodes);
  const auto want = oracle::ggnn_step({adj.out, adj.in, reach, reach.transpose()}, initial(p, s), p);
  EXPECT_LT((run(p, s, 1, srgnn::ConnectionScheme::FC) - want.states).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(PropagateStep, WrongBlockCountIsADimensionError) {
  const auto p = srgnn::zero_params(config_d(2), 3);
  Tape t;
  const auto pv = srgnn::bind(t, p, false);
  const auto g = srgnn::build_session_graph(std::vector<ItemId>{0, 1});
  const auto v = srgnn::init_states(t, g, pv);
  std::vector<Var> adj = {t.constant(g.a_out)};
  EXPECT_THROW(srgnn::propagate_step(adj, v, pv), srgnn::DimensionError);
  adj = {t.constant(g.a_out), t.constant(MatrixXd::Zero(3, 3))};
  EXPECT_THROW(srgnn::propagate_step(adj, v, pv), srgnn::DimensionError);
}

TEST(Propagate, ZeroStepsIsAContractError) {
  const auto p = srgnn::zero_params(config_d(2), 3);
  EXPECT_THROW(run(p, {0, 1}, 0), srgnn::ContractError);
}

TEST(Propagate, TwoStepsComposeOneStep) {
  std::mt19937_64 rng(26);
  const auto p = oracle::random_params(rng, config_d(3), 5);
  const std::vector<ItemId> s = {0, 4, 2, 4};
  Tape t;
  const auto pv = srgnn::bind(t, p, false);
  const auto g = srgnn::build_session_graph(s);
  const auto adj = srgnn::adjacency_constants(t, srgnn::connection_matrix(g, s, srgnn::ConnectionScheme::Standard));
  const auto once = srgnn::propagate_step(adj, srgnn::init_states(t, g, pv), pv);
  const auto twice = srgnn::propagate_step(adj, once.states, pv);
  EXPECT_EQ(srgnn::propagate(t, g, adj, pv, 1).value(), once.states.value());
  EXPECT_EQ(srgnn::propagate(t, g, adj, pv, 2).value(), twice.states.value());
}

class PropagationProperty : public ::testing::Test {
 protected:
  std::mt19937_64 rng{27};

  std::vector<ItemId> session() {
    std::uniform_int_distribution<std::size_t> len(1, 9);
    std::uniform_int_distribution<ItemId> item(0, 7);
    std::vector<ItemId> s(len(rng));
    for (auto& v : s) v = item(rng);
    return s;
  }
};

TEST_F(PropagationProperty, GatesStayInRangeAndUpdateIsConvex) {
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = oracle::random_params(rng, config_d(4), 8, -2.0, 2.0);
    const auto s = session();
    Tape t;
    const auto pv = srgnn::bind(t, p, false);
    const auto g = srgnn::build_session_graph(s);
    const auto adj = srgnn::adjacency_constants(t, srgnn::connection_matrix(g, s, srgnn::ConnectionScheme::Standard));
    const auto v0 = srgnn::init_states(t, g, pv);
    const auto step = srgnn::propagate_step(adj, v0, pv);
    const MatrixXd& z = step.update_gate.value();
    const MatrixXd& r = step.reset_gate.value();
    const MatrixXd& c = step.candidate.value();
    // closed bounds: sigmoid and tanh round to exactly 0 or +-1 once saturated
    EXPECT_GE(z.minCoeff(), 0.0);
    EXPECT_LE(z.maxCoeff(), 1.0);
    EXPECT_GE(r.minCoeff(), 0.0);
    EXPECT_LE(r.maxCoeff(), 1.0);
    EXPECT_GE(c.minCoeff(), -1.0);
    EXPECT_LE(c.maxCoeff(), 1.0);
    const MatrixXd& prev = v0.value();
    const MatrixXd& next = step.states.value();
    for (Eigen::Index i = 0; i < next.rows(); ++i)
      for (Eigen::Index k = 0; k < next.cols(); ++k) {
        EXPECT_GE(next(i, k), std::min(prev(i, k), c(i, k)) - 1e-15);
        EXPECT_LE(next(i, k), std::max(prev(i, k), c(i, k)) + 1e-15);
      }
  }
}

TEST_F(PropagationProperty, PermutingNodesPermutesOutputRows) {
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = oracle::random_params(rng, config_d(3), 8);
    const auto s = session();
    const auto g = srgnn::build_session_graph(s);
    const Eigen::Index n = g.size();
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> P(Eigen::Map<Eigen::VectorXi>(perm.data(), n));

    Tape t;
    const auto pv = srgnn::bind(t, p, false);
    const auto v0 = srgnn::init_states(t, g, pv);
    std::vector<Var> adj = {t.constant(g.a_out), t.constant(g.a_in)};
    std::vector<Var> adj_p = {t.constant(P * g.a_out * P.transpose()), t.constant(P * g.a_in * P.transpose())};
    const MatrixXd base = srgnn::propagate_step(adj, v0, pv).states.value();
    const MatrixXd moved = srgnn::propagate_step(adj_p, t.constant(P * v0.value()), pv).states.value();
    EXPECT_LT((P * base - moved).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST_F(PropagationProperty, IsolatedNodeIgnoresOtherStates) {
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = oracle::random_params(rng, config_d(3), 8);
    MatrixXd out = MatrixXd::Zero(3, 3), in = MatrixXd::Zero(3, 3);
    out(0, 1) = 1;
    in(1, 0) = 1;
    const MatrixXd v = oracle::random_matrix(rng, 3, 3);
    MatrixXd w = v;
    w.topRows(2) = oracle::random_matrix(rng, 2, 3);
    Tape t;
    const auto pv = srgnn::bind(t, p, false);
    std::vector<Var> adj = {t.constant(out), t.constant(in)};
    const MatrixXd a = srgnn::propagate_step(adj, t.constant(v), pv).states.value();
    const MatrixXd b = srgnn::propagate_step(adj, t.constant(w), pv).states.value();
    EXPECT_EQ(a.row(2), b.row(2));
  }
}

TEST(PropagateGradient, OneStepCellMatchesFiniteDifferences) {
  std::mt19937_64 rng(28);
  const auto cfg = config_d(3);
  const auto p = oracle::random_params(rng, cfg, 5);
  const std::vector<ItemId> s = {0, 2, 1, 2, 4};
  const MatrixXd weights = oracle::random_matrix(rng, 4, 3);
  auto report = srgnn::ad::finite_diff_check<double>(
      [&](Tape& t, const std::vector<Var>& vars) {
        const auto pv = srgnn::unflatten(vars, cfg);
        const auto g = srgnn::build_session_graph(s);
        const auto adj = srgnn::adjacency_constants(t, srgnn::connection_matrix(g, s, srgnn::ConnectionScheme::Standard));
        const auto v = srgnn::propagate(t, g, adj, pv, 1);
        return srgnn::ad::sum(srgnn::ad::hadamard(v, t.constant(weights)));
      },
      srgnn::flatten(p), 1e-5);
  EXPECT_LT(report.max_rel_error, 1e-4) << "tensor " << report.param;
}

}  // namespace
