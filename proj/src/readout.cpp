#include "srgnn/readout.hpp"

#include <array>

#include "srgnn/errors.hpp"

namespace srgnn {

Var local_embedding(const SessionGraph& graph, const Var& states) {
  if (graph.alias.empty()) throw ContractError("local_embedding: empty session");
  if (states.rows() != graph.size()) {
    throw DimensionError("local_embedding: " + std::to_string(states.rows()) +
                         " state rows for a graph of " + std::to_string(graph.size()) + " nodes");
  }
  const std::array<Eigen::Index, 1> last{graph.last_node()};
  return ad::gather_rows(states, std::span<const Eigen::Index>(last));
}

AttentionReadout attention_global(const SessionGraph& graph, const Var& states,
                                  const ParamVars& params, bool normalize) {
  const Var last = local_embedding(graph, states);
  const Var pre = ad::add_rowwise(
      ad::add_rowwise(ad::matmul_nt(states, params.w_2), ad::matmul_nt(last, params.w_1)),
      params.c);
  Var alphas = ad::matmul(ad::sigmoid(pre), params.q);
  if (normalize) alphas = ad::transpose(ad::softmax_row(ad::transpose(alphas)));

  AttentionReadout out;
  out.alphas = alphas;
  out.global = ad::matmul(ad::transpose(alphas), states);
  return out;
}

Var average_global(const Var& states) {
  if (states.rows() < 1) throw ContractError("average_global: no nodes");
  const Eigen::Index n = states.rows();
  const Var weights = states.tape()->constant(Eigen::MatrixXd::Constant(1, n, 1.0 / double(n)));
  return ad::matmul(weights, states);
}

Var hybrid_embedding(const Var& local, const Var& global, const ParamVars& params) {
  if (local.cols() != global.cols() || local.rows() != 1 || global.rows() != 1) {
    throw DimensionError("hybrid_embedding: local " + ad::shape_string(local.rows(), local.cols()) +
                         " vs global " + ad::shape_string(global.rows(), global.cols()));
  }
  return ad::matmul_nt(ad::concat_cols(local, global), params.w_3);
}

SessionEmbedding session_embedding(const SessionGraph& graph, const Var& states,
                                   const ParamVars& params, ReadoutMode mode,
                                   bool normalize_attention) {
  SessionEmbedding out;
  out.mode = mode;
  out.local = local_embedding(graph, states);
  switch (mode) {
    case ReadoutMode::Local:
      out.scoring = out.local;
      break;
    case ReadoutMode::Average:
      out.global = average_global(states);
      out.scoring = hybrid_embedding(out.local, out.global, params);
      break;
    case ReadoutMode::Attention:
    case ReadoutMode::Hybrid: {
      auto att = attention_global(graph, states, params, normalize_attention);
      out.global = att.global;
      out.alphas = att.alphas;
      out.scoring = hybrid_embedding(out.local, out.global, params);
      break;
    }
  }
  return out;
}

}  // namespace srgnn
