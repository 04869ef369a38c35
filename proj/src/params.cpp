#include "srgnn/params.hpp"

#include <cctype>
#include <string>

#include "srgnn/errors.hpp"

namespace srgnn {

std::string_view to_string(ReadoutMode mode) {
  switch (mode) {
    case ReadoutMode::Local: return "l";
    case ReadoutMode::Average: return "avg";
    case ReadoutMode::Attention: return "att";
    case ReadoutMode::Hybrid: return "hybrid";
  }
  return "hybrid";
}

std::string_view to_string(LossMode mode) {
  return mode == LossMode::PaperBCE ? "paper-bce" : "ce";
}

ReadoutMode parse_readout_mode(std::string_view text) {
  std::string t(text);
  for (auto& ch : t) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (t == "l" || t == "local") return ReadoutMode::Local;
  if (t == "avg" || t == "average") return ReadoutMode::Average;
  if (t == "att" || t == "attention") return ReadoutMode::Attention;
  if (t == "hybrid") return ReadoutMode::Hybrid;
  throw ContractError("unknown readout mode '" + std::string(text) + "'");
}

LossMode parse_loss_mode(std::string_view text) {
  if (text == "paper-bce") return LossMode::PaperBCE;
  if (text == "ce") return LossMode::MulticlassCE;
  throw ContractError("unknown loss mode '" + std::string(text) + "'");
}

ModelParams zero_params(const ModelConfig& config, std::size_t catalog) {
  if (config.dim < 1) throw ContractError("zero_params: dim must be positive");
  if (catalog < 1) throw ContractError("zero_params: catalog must be non-empty");
  const Eigen::Index d = config.dim;
  const Eigen::Index width = d * static_cast<Eigen::Index>(adjacency_blocks(config.connection));
  auto z = [](Eigen::Index r, Eigen::Index c) { return Eigen::MatrixXd::Zero(r, c); };

  ModelParams p;
  p.embedding = z(static_cast<Eigen::Index>(catalog), d);
  p.h_out = z(d, d);
  p.h_in = z(d, d);
  p.b_out = z(1, d);
  p.b_in = z(1, d);
  if (config.connection == ConnectionScheme::FC) {
    p.h_reach_out = z(d, d);
    p.h_reach_in = z(d, d);
    p.b_reach_out = z(1, d);
    p.b_reach_in = z(1, d);
  }
  p.w_z = z(d, width);
  p.w_r = z(d, width);
  p.w_o = z(d, width);
  p.u_z = z(d, d);
  p.u_r = z(d, d);
  p.u_o = z(d, d);
  p.q = z(d, 1);
  p.w_1 = z(d, d);
  p.w_2 = z(d, d);
  p.c = z(1, d);
  p.w_3 = z(d, 2 * d);
  return p;
}

std::size_t catalog_size(const ModelParams& params) {
  return static_cast<std::size_t>(params.embedding.rows());
}

std::vector<std::string> tensor_names(const ModelConfig& config) {
  std::vector<std::string> names;
  zero_params(config, 1).for_each([&](std::string_view n, const auto&) { names.emplace_back(n); });
  return names;
}

void validate_shapes(const ModelParams& params, const ModelConfig& config) {
  const ModelParams expected = zero_params(config, std::max<std::size_t>(1, catalog_size(params)));
  std::vector<std::pair<std::string, Eigen::MatrixXd>> want;
  expected.for_each([&](std::string_view n, const auto& m) { want.emplace_back(std::string(n), m); });
  std::size_t i = 0;
  params.for_each([&](std::string_view n, const auto& m) {
    if (i >= want.size() || want[i].first != n) {
      throw DimensionError("parameter set has unexpected tensor '" + std::string(n) + "'");
    }
    if (m.rows() != want[i].second.rows() || m.cols() != want[i].second.cols()) {
      throw DimensionError("parameter '" + std::string(n) + "' is " +
                           ad::shape_string(m.rows(), m.cols()) + ", expected " +
                           ad::shape_string(want[i].second.rows(), want[i].second.cols()));
    }
    ++i;
  });
  if (i != want.size()) throw DimensionError("parameter set is missing tensors");
}

namespace {

// Applies g(src_member, dst_member) pairwise over two ParamSets.
template <typename A, typename B, typename G>
void zip_members(A& a, B& b, G&& g) {
  g(a.embedding, b.embedding);
  g(a.h_out, b.h_out);
  g(a.h_in, b.h_in);
  g(a.b_out, b.b_out);
  g(a.b_in, b.b_in);
  g(a.h_reach_out, b.h_reach_out);
  g(a.h_reach_in, b.h_reach_in);
  g(a.b_reach_out, b.b_reach_out);
  g(a.b_reach_in, b.b_reach_in);
  g(a.w_z, b.w_z);
  g(a.u_z, b.u_z);
  g(a.w_r, b.w_r);
  g(a.u_r, b.u_r);
  g(a.w_o, b.w_o);
  g(a.u_o, b.u_o);
  g(a.q, b.q);
  g(a.w_1, b.w_1);
  g(a.w_2, b.w_2);
  g(a.c, b.c);
  g(a.w_3, b.w_3);
}

}  // namespace

ParamVars bind(Tape& tape, const ModelParams& params, bool trainable) {
  ParamVars vars;
  zip_members(params, vars, [&](const Eigen::MatrixXd& m, Var& v) {
    if (is_present(m)) v = trainable ? tape.leaf(m) : tape.constant(m);
  });
  return vars;
}

ModelParams gradients(const ParamVars& vars) {
  ModelParams grads;
  zip_members(vars, grads, [](const Var& v, Eigen::MatrixXd& g) {
    if (v.valid()) g = v.grad();
  });
  return grads;
}

std::vector<Eigen::MatrixXd> flatten(const ModelParams& params) {
  std::vector<Eigen::MatrixXd> out;
  params.for_each([&](std::string_view, const Eigen::MatrixXd& m) { out.push_back(m); });
  return out;
}

ModelParams unflatten(const std::vector<Eigen::MatrixXd>& tensors, const ModelConfig& config,
                      std::size_t catalog) {
  ModelParams p = zero_params(config, catalog);
  std::size_t i = 0;
  p.for_each([&](std::string_view name, Eigen::MatrixXd& m) {
    if (i >= tensors.size()) throw DimensionError("unflatten: too few tensors");
    if (tensors[i].rows() != m.rows() || tensors[i].cols() != m.cols()) {
      throw DimensionError("unflatten: '" + std::string(name) + "' is " +
                           ad::shape_string(tensors[i].rows(), tensors[i].cols()) +
                           ", expected " + ad::shape_string(m.rows(), m.cols()));
    }
    m = tensors[i++];
  });
  if (i != tensors.size()) throw DimensionError("unflatten: too many tensors");
  return p;
}

ParamVars unflatten(const std::vector<Var>& vars, const ModelConfig& config) {
  const ModelParams shape = zero_params(config, 1);
  ParamVars out;
  std::size_t i = 0;
  zip_members(shape, out, [&](const Eigen::MatrixXd& m, Var& v) {
    if (!is_present(m)) return;
    if (i >= vars.size()) throw DimensionError("unflatten: too few vars");
    v = vars[i++];
  });
  if (i != vars.size()) throw DimensionError("unflatten: too many vars");
  return out;
}

}  // namespace srgnn
