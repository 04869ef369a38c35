#include "srgnn/predictor.hpp"

#include <cmath>
#include <string>

#include "srgnn/errors.hpp"

namespace srgnn {

namespace {

void check_target(ItemId target, Eigen::Index m) {
  if (static_cast<Eigen::Index>(target) >= m) {
    throw ContractError("loss: target " + std::to_string(target) + " outside catalog of " +
                        std::to_string(m));
  }
}

}  // namespace

Var score_items(const Var& sessions, const ParamVars& params) {
  return ad::matmul_nt(sessions, params.embedding);
}

Var predict(const Var& scores) { return ad::softmax_row(scores); }

Var loss(const Var& probs, std::span<const ItemId> targets, LossMode mode) {
  const Eigen::Index b = probs.rows();
  const Eigen::Index m = probs.cols();
  if (static_cast<Eigen::Index>(targets.size()) != b) {
    throw DimensionError("loss: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(b) + " rows");
  }
  Eigen::MatrixXd one_hot = Eigen::MatrixXd::Zero(b, m);
  for (Eigen::Index i = 0; i < b; ++i) {
    check_target(targets[i], m);
    one_hot(i, targets[i]) = 1.0;
  }
  Tape& tape = *probs.tape();
  const Var y = tape.constant(one_hot);
  const Var log_p = ad::log_clamped(probs, kProbFloor, 1.0 - kProbFloor);
  Var total = ad::sum(ad::hadamard(y, log_p));
  if (mode == LossMode::PaperBCE) {
    const Var not_y = tape.constant((1.0 - one_hot.array()).matrix());
    const Var log_not_p = ad::log_clamped(ad::affine(probs, -1.0, 1.0), kProbFloor, 1.0 - kProbFloor);
    total = total + ad::sum(ad::hadamard(not_y, log_not_p));
  }
  return ad::affine(total, -1.0 / double(b));
}

Eigen::VectorXd score_items(const Eigen::VectorXd& session, const Eigen::MatrixXd& embedding) {
  if (session.size() != embedding.cols()) {
    throw DimensionError("score_items: session of length " + std::to_string(session.size()) +
                         " against embedding " + ad::shape_string(embedding.rows(), embedding.cols()));
  }
  return embedding * session;
}

Eigen::VectorXd predict(const Eigen::VectorXd& scores) {
  if (!scores.allFinite()) throw NumericError("predict: non-finite scores");
  Eigen::VectorXd e = (scores.array() - scores.maxCoeff()).exp().matrix();
  return e / e.sum();
}

double loss(const Eigen::VectorXd& probs, ItemId target, LossMode mode) {
  check_target(target, probs.size());
  auto clamp = [](double p) { return std::min(std::max(p, kProbFloor), 1.0 - kProbFloor); };
  if (mode == LossMode::MulticlassCE) return -std::log(clamp(probs(target)));
  double total = 0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const double p = clamp(probs(i));
    total += (i == static_cast<Eigen::Index>(target)) ? std::log(p) : std::log(1.0 - p);
  }
  return -total;
}

}  // namespace srgnn
