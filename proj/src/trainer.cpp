#include "srgnn/trainer.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace srgnn {

void validate(const TrainConfig& c) {
  auto fail = [](const std::string& what) { throw ContractError("train config: " + what); };
  if (c.model.dim < 1) fail("d must be positive");
  if (c.model.steps < 1) fail("steps must be at least 1");
  if (!(c.lr >= 0.0) || !std::isfinite(c.lr)) fail("lr must be non-negative");
  if (!(c.lr_decay > 0.0 && c.lr_decay <= 1.0)) fail("lr_decay must be in (0, 1]");
  if (c.decay_every < 1) fail("decay_every must be positive");
  if (c.batch_size < 1) fail("batch size must be positive");
  if (!(c.l2 >= 0.0)) fail("l2 must be non-negative");
  if (c.epochs < 0) fail("epochs must be non-negative");
  if (!(c.validation_fraction >= 0.0 && c.validation_fraction < 1.0)) {
    fail("validation fraction must be in [0, 1)");
  }
  if (c.k < 1) fail("k must be positive");
}

AdamState make_adam_state(const ModelParams& params) {
  AdamState s;
  s.m = params;
  s.m.for_each([](std::string_view, Eigen::MatrixXd& x) { x.setZero(); });
  s.v = s.m;
  return s;
}

ModelParams init_params(const ModelConfig& config, std::size_t catalog, Rng& rng) {
  ModelParams p = zero_params(config, catalog);
  std::normal_distribution<double> normal(0.0, 0.1);
  p.for_each([&](std::string_view, Eigen::MatrixXd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(rng);
    }
  });
  return p;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr,
               double l2, const AdamHyper& hyper) {
  auto p = flatten(params);
  const auto g = flatten(grads);
  if (g.size() != p.size()) throw DimensionError("adam_step: gradient set does not match params");
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (g[i].rows() != p[i].rows() || g[i].cols() != p[i].cols()) {
      throw DimensionError("adam_step: gradient " + std::to_string(i) + " is " +
                           ad::shape_string(g[i].rows(), g[i].cols()) + ", parameter is " +
                           ad::shape_string(p[i].rows(), p[i].cols()));
    }
    if (!g[i].allFinite()) throw NumericError("adam_step: non-finite gradient, step aborted");
  }

  if (!is_present(state.m.embedding)) {
    const std::uint64_t step = state.step;
    state = make_adam_state(params);
    state.step = step;
  }

  state.step += 1;
  const double t = double(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);

  auto moments_m = flatten(state.m);
  auto moments_v = flatten(state.v);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Eigen::ArrayXXd grad = g[i].array() + l2 * p[i].array();
    moments_m[i] = (hyper.beta1 * moments_m[i].array() + (1.0 - hyper.beta1) * grad).matrix();
    moments_v[i] =
        (hyper.beta2 * moments_v[i].array() + (1.0 - hyper.beta2) * grad.square()).matrix();
    const Eigen::ArrayXXd m_hat = moments_m[i].array() / c1;
    const Eigen::ArrayXXd v_hat = moments_v[i].array() / c2;
    p[i] = (p[i].array() - lr * m_hat / (v_hat.sqrt() + hyper.eps)).matrix();
  }
  std::size_t k = 0;
  params.for_each([&](std::string_view, Eigen::MatrixXd& m) { m = std::move(p[k++]); });
  k = 0;
  state.m.for_each([&](std::string_view, Eigen::MatrixXd& m) { m = std::move(moments_m[k++]); });
  k = 0;
  state.v.for_each([&](std::string_view, Eigen::MatrixXd& m) { m = std::move(moments_v[k++]); });
}

double learning_rate(const TrainConfig& config, int epochs_completed) {
  const int decays = std::max(0, epochs_completed) / config.decay_every;
  return config.lr * std::pow(config.lr_decay, decays);
}

EpochSummary train_epoch(Model& model, AdamState& state, std::span<const Session> samples,
                         const TrainConfig& config, int epoch, Rng& rng) {
  if (samples.empty()) throw ContractError("train_epoch: empty dataset");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  EpochSummary summary;
  summary.epoch = epoch;
  summary.lr = learning_rate(config, epoch);
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  double loss_sum = 0;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    std::vector<Session> batch;
    batch.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) batch.push_back(samples[order[i]]);

    try {
      Tape tape;
      const ParamVars vars = bind(tape, model.params);
      const Var l = batch_loss(tape, vars, batch, model.config, &model.global);
      tape.backward(l);
      adam_step(model.params, gradients(vars), state, summary.lr, config.l2);
      loss_sum += l.value()(0, 0) * double(batch.size());
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                         std::to_string(summary.batches) + ": " + e.what());
    }
    ++summary.batches;
  }
  summary.mean_loss = loss_sum / double(samples.size());
  return summary;
}

double dataset_loss(const Model& model, std::span<const Session> samples, LossMode mode,
                    std::size_t batch_size) {
  if (samples.empty()) throw ContractError("dataset_loss: empty dataset");
  ModelConfig config = model.config;
  config.loss = mode;
  double total = 0;
  batch_size = std::max<std::size_t>(1, batch_size);
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const auto batch = samples.subspan(start, std::min(batch_size, samples.size() - start));
    Tape tape;
    const ParamVars vars = bind(tape, model.params, false);
    total += batch_loss(tape, vars, batch, config, &model.global).value()(0, 0) * double(batch.size());
  }
  return total / double(samples.size());
}

TrainResult train(const TrainConfig& config, std::size_t catalog, std::span<const Session> train,
                  std::span<const Session> validation, const GlobalGraph& global,
                  const EpochCallback& on_epoch) {
  validate(config);
  Rng rng(config.seed);

  TrainResult result;
  Model model;
  model.config = config.model;
  model.params = init_params(config.model, catalog, rng);
  model.global = global;
  AdamState adam = make_adam_state(model.params);

  // ties on P@k go to the higher MRR@k, then to the earlier epoch
  double best_p = -1.0, best_mrr = -1.0;
  result.model = model;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const EpochSummary summary = train_epoch(model, adam, train, config, epoch, rng);
    result.history.push_back(summary);
    result.epochs_completed = epoch + 1;

    const EvalReport* report = nullptr;
    if (!validation.empty()) {
      result.validation.push_back(evaluate(model, validation, config.k));
      report = &result.validation.back();
      if (report->p_at_k > best_p || (report->p_at_k == best_p && report->mrr_at_k > best_mrr)) {
        best_p = report->p_at_k;
        best_mrr = report->mrr_at_k;
        result.model = model;
        result.best_epoch = epoch + 1;
      }
    } else {
      result.model = model;
      result.best_epoch = epoch + 1;
    }
    if (on_epoch) on_epoch(summary, report);
  }
  result.adam = std::move(adam);
  return result;
}

}  // namespace srgnn
