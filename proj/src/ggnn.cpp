#include "srgnn/ggnn.hpp"

#include <string>

#include "srgnn/errors.hpp"

namespace srgnn {

Var init_states(Tape& tape, const SessionGraph& graph, const ParamVars& params) {
  tape.check_owned(params.embedding, "init_states");
  std::vector<Eigen::Index> rows(graph.nodes.begin(), graph.nodes.end());
  for (Eigen::Index r : rows) {
    if (r >= params.embedding.rows()) {
      throw CatalogError("init_states: item " + std::to_string(r) + " outside catalog of " +
                         std::to_string(params.embedding.rows()));
    }
  }
  return ad::gather_rows(params.embedding, std::span<const Eigen::Index>(rows));
}

std::vector<Var> adjacency_constants(Tape& tape, const ConnectionMatrices& adjacency) {
  std::vector<Var> out;
  out.reserve(adjacency.blocks.size());
  for (const auto& block : adjacency.blocks) out.push_back(tape.constant(block));
  return out;
}

PropagationStep propagate_step(std::span<const Var> adjacency, const Var& states,
                               const ParamVars& params) {
  const Var* transforms[4][2] = {{&params.h_out, &params.b_out},
                                 {&params.h_in, &params.b_in},
                                 {&params.h_reach_out, &params.b_reach_out},
                                 {&params.h_reach_in, &params.b_reach_in}};
  if (adjacency.size() != 2 && adjacency.size() != 4) {
    throw DimensionError("propagate_step: expected 2 or 4 adjacency blocks, got " +
                         std::to_string(adjacency.size()));
  }
  const Eigen::Index expected_width = params.u_z.cols() * static_cast<Eigen::Index>(adjacency.size());
  if (params.w_z.cols() != expected_width) {
    throw DimensionError("propagate_step: gate input width " + std::to_string(params.w_z.cols()) +
                         " does not match " + std::to_string(adjacency.size()) + " blocks");
  }

  std::vector<Var> aggregated;
  aggregated.reserve(adjacency.size());
  for (std::size_t k = 0; k < adjacency.size(); ++k) {
    const Var& h = *transforms[k][0];
    const Var& b = *transforms[k][1];
    if (!h.valid() || !b.valid()) {
      throw DimensionError("propagate_step: missing transform for adjacency block " +
                           std::to_string(k));
    }
    const Var messages = ad::add_rowwise(ad::matmul_nt(states, h), b);
    aggregated.push_back(ad::matmul(adjacency[k], messages));
  }
  const Var a = ad::concat_cols(std::span<const Var>(aggregated));

  PropagationStep step;
  step.update_gate = ad::sigmoid(ad::matmul_nt(a, params.w_z) + ad::matmul_nt(states, params.u_z));
  step.reset_gate = ad::sigmoid(ad::matmul_nt(a, params.w_r) + ad::matmul_nt(states, params.u_r));
  step.candidate = ad::tanh(ad::matmul_nt(a, params.w_o) +
                            ad::matmul_nt(ad::hadamard(step.reset_gate, states), params.u_o));
  const Var keep = ad::affine(step.update_gate, -1.0, 1.0);
  step.states = ad::hadamard(keep, states) + ad::hadamard(step.update_gate, step.candidate);
  return step;
}

Var propagate(Tape& tape, const SessionGraph& graph, std::span<const Var> adjacency,
              const ParamVars& params, int steps) {
  if (steps < 1) throw ContractError("propagate: step count must be at least 1");
  Var states = init_states(tape, graph, params);
  for (int t = 0; t < steps; ++t) states = propagate_step(adjacency, states, params).states;
  return states;
}

}  // namespace srgnn
