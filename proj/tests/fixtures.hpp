#pragma once

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "srgnn/data_pipeline.hpp"
#include "srgnn/session_graph.hpp"
#include "srgnn/trainer.hpp"

namespace fixtures {

using srgnn::ItemId;
using srgnn::Session;

// Sessions that walk a fixed random cycle over the catalog, so the next
// click is a function of the last one and a model can fit them exactly.
inline std::vector<std::vector<ItemId>> cycle_sessions(std::size_t count, ItemId catalog,
                                                       std::uint64_t seed, std::size_t min_len = 3,
                                                       std::size_t max_len = 7) {
  std::mt19937_64 rng(seed);
  std::vector<ItemId> order(catalog);
  std::iota(order.begin(), order.end(), ItemId{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<ItemId> next(catalog);
  for (ItemId i = 0; i < catalog; ++i) next[order[i]] = order[(i + 1) % catalog];

  std::uniform_int_distribution<ItemId> start(0, catalog - 1);
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::vector<std::vector<ItemId>> out;
  for (std::size_t s = 0; s < count; ++s) {
    std::vector<ItemId> seq{start(rng)};
    const std::size_t n = len(rng);
    while (seq.size() < n) seq.push_back(next[seq.back()]);
    out.push_back(seq);
  }
  return out;
}

struct OverfitCorpus {
  std::vector<std::vector<ItemId>> sessions;
  std::vector<Session> samples;
  srgnn::GlobalGraph global;
  std::size_t catalog = 10;
};

inline OverfitCorpus overfit_corpus(std::uint64_t seed = 7) {
  OverfitCorpus c;
  c.sessions = cycle_sessions(20, 10, seed);
  c.samples = srgnn::augment(c.sessions);
  c.global = srgnn::build_global_graph(c.sessions);
  return c;
}

inline srgnn::TrainConfig overfit_config() {
  srgnn::TrainConfig cfg;
  cfg.model.dim = 32;
  cfg.model.loss = srgnn::LossMode::MulticlassCE;
  cfg.epochs = 50;
  cfg.lr = 0.01;
  cfg.lr_decay = 1.0;
  cfg.decay_every = 3;
  cfg.batch_size = 10;
  cfg.l2 = 0.0;
  cfg.seed = 2018;
  return cfg;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("srgnn_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
