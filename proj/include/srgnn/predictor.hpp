#pragma once

#include <Eigen/Dense>

#include <span>

#include "srgnn/params.hpp"

namespace srgnn {

// Probabilities are clamped to [kProbFloor, 1 - kProbFloor] before any log.
inline constexpr double kProbFloor = 1e-12;

// B x d session vectors against the m x d embedding table -> B x m scores.
Var score_items(const Var& sessions, const ParamVars& params);

// Row-wise softmax.
Var predict(const Var& scores);

// Mean over rows of the per-sample loss; targets[i] is the label of row i.
//   PaperBCE:     -sum_j [ y_j log p_j + (1 - y_j) log(1 - p_j) ]
//   MulticlassCE: -log p_target
Var loss(const Var& probs, std::span<const ItemId> targets, LossMode mode);

// Scalar counterparts of the above, for reporting and checks.
Eigen::VectorXd score_items(const Eigen::VectorXd& session, const Eigen::MatrixXd& embedding);
Eigen::VectorXd predict(const Eigen::VectorXd& scores);
double loss(const Eigen::VectorXd& probs, ItemId target, LossMode mode);

}  // namespace srgnn
