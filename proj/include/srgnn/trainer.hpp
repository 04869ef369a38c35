#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "srgnn/errors.hpp"
#include "srgnn/evaluator.hpp"
#include "srgnn/model.hpp"

namespace srgnn {

using Rng = std::mt19937_64;

struct TrainConfig {
  ModelConfig model;
  double lr = 0.001;
  double lr_decay = 0.1;
  int decay_every = 3;
  int batch_size = 100;
  double l2 = 1e-5;
  int epochs = 30;
  std::uint64_t seed = 2018;
  double validation_fraction = 0.1;
  int k = 20;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Throws ContractError naming the first invalid field.
void validate(const TrainConfig& config);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  ModelParams m;
  ModelParams v;
  std::uint64_t step = 0;
};

AdamState make_adam_state(const ModelParams& params);

// Every entry ~ N(0, 0.1^2).
ModelParams init_params(const ModelConfig& config, std::size_t catalog, Rng& rng);

// One bias-corrected Adam update. The L2 penalty enters as l2 * theta added
// to each gradient. Non-finite gradients abort the step before any write.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr,
               double l2 = 0.0, const AdamHyper& hyper = {});

// lr after `epochs_completed` epochs: lr * lr_decay^floor(epochs / decay_every).
double learning_rate(const TrainConfig& config, int epochs_completed);

struct EpochSummary {
  int epoch = 0;
  double mean_loss = 0;
  double lr = 0;
  std::size_t batches = 0;
};

// One pass over shuffled mini-batches with an Adam step per batch.
EpochSummary train_epoch(Model& model, AdamState& state, std::span<const Session> samples,
                         const TrainConfig& config, int epoch, Rng& rng);

// Mean loss over samples without updating anything.
double dataset_loss(const Model& model, std::span<const Session> samples, LossMode mode,
                    std::size_t batch_size = 100);

// Random disjoint split; the validation side gets floor(n * fraction) items.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> validate_split(std::vector<T> items, double fraction,
                                                         Rng& rng) {
  if (items.size() < 2) throw ContractError("validate_split: need at least 2 items");
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw ContractError("validate_split: fraction must be in [0, 1)");
  }
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::floor(double(items.size()) * fraction));
  std::vector<bool> is_val(items.size(), false);
  for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;

  std::pair<std::vector<T>, std::vector<T>> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    (is_val[i] ? out.second : out.first).push_back(std::move(items[i]));
  }
  return out;
}

struct TrainResult {
  Model model;  // best validation (P@k, then MRR@k), or the final model without validation
  AdamState adam;
  int best_epoch = 0;
  int epochs_completed = 0;
  std::vector<EpochSummary> history;
  std::vector<EvalReport> validation;
};

using EpochCallback = std::function<void(const EpochSummary&, const EvalReport* validation)>;

TrainResult train(const TrainConfig& config, std::size_t catalog, std::span<const Session> train,
                  std::span<const Session> validation, const GlobalGraph& global,
                  const EpochCallback& on_epoch = {});

}  // namespace srgnn
