#pragma once

#include <Eigen/Dense>

#include <span>

#include "srgnn/ggnn.hpp"
#include "srgnn/params.hpp"
#include "srgnn/predictor.hpp"
#include "srgnn/readout.hpp"
#include "srgnn/session_graph.hpp"

namespace srgnn {

// Everything needed to score a session. `global` is only consulted by the
// NGC connection scheme.
struct Model {
  ModelConfig config;
  ModelParams params;
  GlobalGraph global;

  std::size_t catalog() const { return catalog_size(params); }
};

struct SessionForward {
  SessionGraph graph;
  ConnectionMatrices adjacency;
  Var states;
  SessionEmbedding embedding;
};

// Graph construction, propagation and readout for one session prefix.
SessionForward forward_session(Tape& tape, const ParamVars& params, std::span<const ItemId> items,
                               const ModelConfig& config, const GlobalGraph* global);

// B x m scores for a batch of prefixes.
Var forward_scores(Tape& tape, const ParamVars& params, std::span<const Session> batch,
                   const ModelConfig& config, const GlobalGraph* global);

// Mean loss of a labelled batch under config.loss.
Var batch_loss(Tape& tape, const ParamVars& params, std::span<const Session> batch,
               const ModelConfig& config, const GlobalGraph* global);

// Inference only: B x m scores without recording gradients.
Eigen::MatrixXd score_sessions(const Model& model, std::span<const Session> batch);

}  // namespace srgnn
