#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "srgnn/errors.hpp"
#include "srgnn/gradcheck.hpp"
#include "srgnn/predictor.hpp"

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using srgnn::ItemId;
using srgnn::LossMode;
using srgnn::Tape;
using srgnn::Var;

srgnn::ParamVars with_embedding(Tape& t, const MatrixXd& e) {
  srgnn::ParamVars pv;
  pv.embedding = t.constant(e);
  return pv;
}

TEST(Score, ZeroSessionScoresZero) {
  std::mt19937_64 rng(51);
  const MatrixXd e = oracle::random_matrix(rng, 6, 3);
  EXPECT_TRUE(srgnn::score_items(VectorXd::Zero(3), e).isZero());
}

TEST(Score, OrthonormalTablePicksTheRow) {
  const MatrixXd e = MatrixXd::Identity(4, 4);
  const VectorXd s = e.row(2).transpose();
  VectorXd want = VectorXd::Zero(4);
  want(2) = 1;
  EXPECT_EQ(srgnn::score_items(s, e), want);
}

TEST(Score, MatchesMatvecOracle) {
  std::mt19937_64 rng(52);
  const MatrixXd e = oracle::random_matrix(rng, 5, 3);
  const MatrixXd s = oracle::random_matrix(rng, 2, 3);
  Tape t;
  const MatrixXd got = srgnn::score_items(t.constant(s), with_embedding(t, e)).value();
  for (int b = 0; b < 2; ++b) {
    const auto want = oracle::affine_row(oracle::row_of(s, b), e);
    for (int j = 0; j < 5; ++j) EXPECT_NEAR(got(b, j), want[static_cast<std::size_t>(j)], 1e-15);
    const VectorXd plain = srgnn::score_items(VectorXd(s.row(b).transpose()), e);
    for (int j = 0; j < 5; ++j) EXPECT_NEAR(plain(j), want[static_cast<std::size_t>(j)], 1e-15);
  }
}

TEST(ScoreProperty, ArgmaxInvariantUnderPositiveScaling) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    const MatrixXd e = oracle::random_matrix(rng, 20, 4);
    const VectorXd s = oracle::random_matrix(rng, 4, 1);
    const double lambda = std::uniform_real_distribution<double>(0.01, 100)(rng);
    Eigen::Index a, b;
    srgnn::score_items(s, e).maxCoeff(&a);
    srgnn::score_items(VectorXd(lambda * s), e).maxCoeff(&b);
    EXPECT_EQ(a, b);
  }
}

TEST(Predict, EqualScoresGiveUniform) {
  const VectorXd p = srgnn::predict(VectorXd::Constant(8, -3.5));
  for (int j = 0; j < 8; ++j) EXPECT_NEAR(p(j), 0.125, 1e-15);
}

TEST(Predict, MatchesDirectExponentiation) {
  VectorXd z(3);
  z << 1, 2, 3;
  const auto want = oracle::softmax({1, 2, 3});
  const VectorXd got = srgnn::predict(z);
  Tape t;
  const MatrixXd tape_got = srgnn::predict(t.constant(MatrixXd(z.transpose()))).value();
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(got(j), want[static_cast<std::size_t>(j)], 1e-15);
    EXPECT_NEAR(tape_got(0, j), want[static_cast<std::size_t>(j)], 1e-15);
  }
}

TEST(Predict, LargeScoresStayFinite) {
  VectorXd z(3);
  z << 1000, 999, -1000;
  const VectorXd p = srgnn::predict(z);
  EXPECT_TRUE(p.allFinite());
  EXPECT_NEAR(p.sum(), 1.0, 1e-12);
}

TEST(Loss, UniformTwoItems) {
  const VectorXd p = VectorXd::Constant(2, 0.5);
  EXPECT_NEAR(srgnn::loss(p, 0, LossMode::MulticlassCE), std::log(2.0), 1e-15);
  EXPECT_NEAR(srgnn::loss(p, 0, LossMode::PaperBCE), 2 * std::log(2.0), 1e-15);
}

TEST(Loss, PerfectPredictionIsNearZero) {
  VectorXd p = VectorXd::Zero(5);
  p(3) = 1.0;
  for (auto mode : {LossMode::MulticlassCE, LossMode::PaperBCE}) {
    const double l = srgnn::loss(p, 3, mode);
    EXPECT_GE(l, 0.0);
    EXPECT_LT(l, 1e-10);
  }
}

TEST(Loss, MatchesFormulaOnRandomProbabilities) {
  std::mt19937_64 rng(54);
  for (int trial = 0; trial < 50; ++trial) {
    const auto probs = oracle::softmax(oracle::row_of(oracle::random_matrix(rng, 1, 4, -3, 3), 0));
    const auto target = static_cast<ItemId>(std::uniform_int_distribution<int>(0, 3)(rng));
    double bce = 0;
    for (std::size_t j = 0; j < 4; ++j)
      bce -= (j == target) ? std::log(probs[j]) : std::log(1 - probs[j]);
    const double ce = -std::log(probs[target]);
    const VectorXd p = Eigen::Map<const VectorXd>(probs.data(), 4);
    EXPECT_NEAR(srgnn::loss(p, target, LossMode::PaperBCE), bce, 1e-13);
    EXPECT_NEAR(srgnn::loss(p, target, LossMode::MulticlassCE), ce, 1e-13);

    Tape t;
    const auto v = t.constant(MatrixXd(p.transpose()));
    const std::vector<ItemId> targets = {target};
    EXPECT_NEAR(srgnn::loss(v, targets, LossMode::PaperBCE).value()(0, 0), bce, 1e-13);
    EXPECT_NEAR(srgnn::loss(v, targets, LossMode::MulticlassCE).value()(0, 0), ce, 1e-13);
  }
}

TEST(Loss, BatchLossIsTheRowMean) {
  std::mt19937_64 rng(55);
  Tape t;
  const MatrixXd scores = oracle::random_matrix(rng, 3, 5);
  const std::vector<ItemId> targets = {4, 0, 2};
  const auto probs = srgnn::predict(t.constant(scores));
  const double batch = srgnn::loss(probs, targets, LossMode::MulticlassCE).value()(0, 0);
  double want = 0;
  for (int b = 0; b < 3; ++b)
    want += srgnn::loss(srgnn::predict(VectorXd(scores.row(b).transpose())), targets[static_cast<std::size_t>(b)],
                        LossMode::MulticlassCE) / 3;
  EXPECT_NEAR(batch, want, 1e-14);
}

TEST(Loss, OutOfRangeTargetIsRejected) {
  EXPECT_THROW(srgnn::loss(VectorXd::Constant(3, 1.0 / 3), 3, LossMode::MulticlassCE), srgnn::ContractError);
  Tape t;
  const std::vector<ItemId> targets = {5};
  EXPECT_THROW(srgnn::loss(t.constant(MatrixXd::Constant(1, 3, 1.0 / 3)), targets, LossMode::PaperBCE),
               srgnn::ContractError);
}

TEST(LossProperty, NonNegative) {
  std::mt19937_64 rng(56);
  for (int trial = 0; trial < 200; ++trial) {
    const MatrixXd z = oracle::random_matrix(rng, 1, 7, -20, 20);
    const VectorXd p = srgnn::predict(VectorXd(z.transpose()));
    for (auto mode : {LossMode::MulticlassCE, LossMode::PaperBCE})
      EXPECT_GE(srgnn::loss(p, static_cast<ItemId>(trial % 7), mode), 0.0);
  }
}

TEST(LossProperty, CrossEntropyGradientIsProbsMinusOneHot) {
  std::mt19937_64 rng(57);
  for (int trial = 0; trial < 50; ++trial) {
    Tape t;
    const auto z = t.leaf(oracle::random_matrix(rng, 1, 6, -2, 2));
    const std::vector<ItemId> targets = {static_cast<ItemId>(trial % 6)};
    const auto probs = srgnn::predict(z);
    t.backward(srgnn::loss(probs, targets, LossMode::MulticlassCE));
    MatrixXd want = probs.value();
    want(0, targets[0]) -= 1.0;
    EXPECT_LT((z.grad() - want).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(LossGradient, BothModesPassFiniteDifferences) {
  std::mt19937_64 rng(58);
  for (auto mode : {LossMode::MulticlassCE, LossMode::PaperBCE}) {
    auto report = srgnn::ad::finite_diff_check<double>(
        [&](Tape&, const std::vector<Var>& v) {
          srgnn::ParamVars pv;
          pv.embedding = v[1];
          const std::vector<ItemId> targets = {1, 4};
          return srgnn::loss(srgnn::predict(srgnn::score_items(v[0], pv)), targets, mode);
        },
        {oracle::random_matrix(rng, 2, 3), oracle::random_matrix(rng, 5, 3)}, 1e-5);
    EXPECT_LT(report.max_rel_error, 1e-4) << srgnn::to_string(mode);
  }
}

}  // namespace
