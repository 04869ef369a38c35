#pragma once

#include <Eigen/Dense>

#include <string_view>
#include <vector>

#include "srgnn/autodiff.hpp"
#include "srgnn/session_graph.hpp"

namespace srgnn {

using Tape = ad::Tape<double>;
using Var = ad::Var<double>;

// L: last-click state only. Average/Attention: local fused with an averaged
// or attention-pooled global vector. Hybrid is the full model and scores the
// same way as Attention.
enum class ReadoutMode { Local, Average, Attention, Hybrid };

enum class LossMode { PaperBCE, MulticlassCE };

std::string_view to_string(ReadoutMode mode);
std::string_view to_string(LossMode mode);
ReadoutMode parse_readout_mode(std::string_view text);
LossMode parse_loss_mode(std::string_view text);

struct ModelConfig {
  int dim = 100;
  int steps = 1;
  ReadoutMode readout = ReadoutMode::Hybrid;
  ConnectionScheme connection = ConnectionScheme::Standard;
  LossMode loss = LossMode::PaperBCE;
  bool normalize_attention = false;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline bool is_present(const Eigen::MatrixXd& m) { return m.size() > 0; }
inline bool is_present(const Var& v) { return v.valid(); }

// Every trainable tensor, stored in column-vector orientation:
// weight matrices are (out x in), biases and c are 1 x d rows, q is d x 1.
// The reach_* members exist only for the FC connection scheme, whose gate
// inputs are 4d wide instead of 2d.
template <typename M>
struct ParamSet {
  M embedding;  // m x d, shared between state init and candidate scoring
  M h_out, h_in, b_out, b_in;
  M h_reach_out, h_reach_in, b_reach_out, b_reach_in;
  M w_z, u_z, w_r, u_r, w_o, u_o;
  M q, w_1, w_2, c;
  M w_3;

  // f(name, member) over the present members, always in one fixed order.
  template <typename F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

 private:
  template <typename Self, typename F>
  static void visit(Self& s, F& f) {
    auto call = [&](std::string_view name, auto& member) {
      if (is_present(member)) f(name, member);
    };
    call("embedding", s.embedding);
    call("h_out", s.h_out);
    call("h_in", s.h_in);
    call("b_out", s.b_out);
    call("b_in", s.b_in);
    call("h_reach_out", s.h_reach_out);
    call("h_reach_in", s.h_reach_in);
    call("b_reach_out", s.b_reach_out);
    call("b_reach_in", s.b_reach_in);
    call("w_z", s.w_z);
    call("u_z", s.u_z);
    call("w_r", s.w_r);
    call("u_r", s.u_r);
    call("w_o", s.w_o);
    call("u_o", s.u_o);
    call("q", s.q);
    call("w_1", s.w_1);
    call("w_2", s.w_2);
    call("c", s.c);
    call("w_3", s.w_3);
  }
};

using ModelParams = ParamSet<Eigen::MatrixXd>;
using ParamVars = ParamSet<Var>;

// Correctly shaped, all-zero parameters for `catalog` items.
ModelParams zero_params(const ModelConfig& config, std::size_t catalog);

// Checks every member shape against config and catalog size.
void validate_shapes(const ModelParams& params, const ModelConfig& config);

std::size_t catalog_size(const ModelParams& params);

// Registers params on the tape, as leaves when trainable, else constants.
ParamVars bind(Tape& tape, const ModelParams& params, bool trainable = true);

// Gradients of bound leaves after tape.backward().
ModelParams gradients(const ParamVars& vars);

// Flat views in for_each order, used by gradient checks and checkpoints.
std::vector<Eigen::MatrixXd> flatten(const ModelParams& params);
ModelParams unflatten(const std::vector<Eigen::MatrixXd>& tensors, const ModelConfig& config,
                      std::size_t catalog);
ParamVars unflatten(const std::vector<Var>& vars, const ModelConfig& config);

std::vector<std::string> tensor_names(const ModelConfig& config);

}  // namespace srgnn
