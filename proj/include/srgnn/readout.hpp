#pragma once

#include "srgnn/params.hpp"
#include "srgnn/session_graph.hpp"

namespace srgnn {

// `scoring` is the 1 x d vector used against the catalog: s_local in Local
// mode, W_3 [s_local; s_global] otherwise. global and alphas are unset in
// Local mode; alphas is n x 1 and only set for attention readouts.
struct SessionEmbedding {
  ReadoutMode mode = ReadoutMode::Hybrid;
  Var local;
  Var global;
  Var scoring;
  Var alphas;
};

struct AttentionReadout {
  Var global;
  Var alphas;
};

// State row of the node at the last sequence position.
Var local_embedding(const SessionGraph& graph, const Var& states);

// alpha_i = q^T sigmoid(W_1 v_n + W_2 v_i + c), s_g = sum_i alpha_i v_i.
// The scores are used raw unless `normalize` applies a softmax over nodes.
AttentionReadout attention_global(const SessionGraph& graph, const Var& states,
                                  const ParamVars& params, bool normalize = false);

// Mean of the node state rows.
Var average_global(const Var& states);

// W_3 [s_local; s_global].
Var hybrid_embedding(const Var& local, const Var& global, const ParamVars& params);

SessionEmbedding session_embedding(const SessionGraph& graph, const Var& states,
                                   const ParamVars& params, ReadoutMode mode,
                                   bool normalize_attention = false);

}  // namespace srgnn
