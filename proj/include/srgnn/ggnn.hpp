#pragma once

#include <span>
#include <vector>

#include "srgnn/params.hpp"
#include "srgnn/session_graph.hpp"

namespace srgnn {

// Intermediate values of one propagation step, all n x d.
struct PropagationStep {
  Var states;
  Var update_gate;
  Var reset_gate;
  Var candidate;
};

// Row i is the embedding of graph.nodes[i].
Var init_states(Tape& tape, const SessionGraph& graph, const ParamVars& params);

// Records the adjacency blocks as constants on the tape.
std::vector<Var> adjacency_constants(Tape& tape, const ConnectionMatrices& adjacency);

// One gated update of every node at once. Each adjacency block k aggregates
// neighbours as A_k (V H_k^T + b_k); the aggregations are concatenated into
// the gate input a, then
//   z = sigmoid(a W_z^T + V U_z^T)
//   r = sigmoid(a W_r^T + V U_r^T)
//   c = tanh(a W_o^T + (r . V) U_o^T)
//   V' = (1 - z) . V + z . c
PropagationStep propagate_step(std::span<const Var> adjacency, const Var& states,
                               const ParamVars& params);

// `steps` applications of propagate_step starting from init_states.
Var propagate(Tape& tape, const SessionGraph& graph, std::span<const Var> adjacency,
              const ParamVars& params, int steps);

}  // namespace srgnn
