#include "srgnn/model.hpp"

#include <vector>

#include "srgnn/errors.hpp"

namespace srgnn {

SessionForward forward_session(Tape& tape, const ParamVars& params, std::span<const ItemId> items,
                               const ModelConfig& config, const GlobalGraph* global) {
  SessionForward f;
  f.graph = build_session_graph(items);
  f.adjacency = connection_matrix(f.graph, items, config.connection, global);
  const auto blocks = adjacency_constants(tape, f.adjacency);
  f.states = propagate(tape, f.graph, blocks, params, config.steps);
  f.embedding =
      session_embedding(f.graph, f.states, params, config.readout, config.normalize_attention);
  return f;
}

Var forward_scores(Tape& tape, const ParamVars& params, std::span<const Session> batch,
                   const ModelConfig& config, const GlobalGraph* global) {
  if (batch.empty()) throw ContractError("forward_scores: empty batch");
  std::vector<Var> rows;
  rows.reserve(batch.size());
  for (const auto& s : batch) {
    rows.push_back(forward_session(tape, params, s.items, config, global).embedding.scoring);
  }
  const Var stacked = rows.size() == 1 ? rows.front() : ad::concat_rows(std::span<const Var>(rows));
  return score_items(stacked, params);
}

Var batch_loss(Tape& tape, const ParamVars& params, std::span<const Session> batch,
               const ModelConfig& config, const GlobalGraph* global) {
  std::vector<ItemId> targets;
  targets.reserve(batch.size());
  for (const auto& s : batch) {
    if (!s.label) throw ContractError("batch_loss: sample without label");
    targets.push_back(*s.label);
  }
  const Var scores = forward_scores(tape, params, batch, config, global);
  return loss(predict(scores), targets, config.loss);
}

Eigen::MatrixXd score_sessions(const Model& model, std::span<const Session> batch) {
  Tape tape;
  const ParamVars vars = bind(tape, model.params, false);
  return forward_scores(tape, vars, batch, model.config, &model.global).value();
}

}  // namespace srgnn
