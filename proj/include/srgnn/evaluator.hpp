#pragma once

#include <Eigen/Dense>

#include <map>
#include <span>
#include <string>
#include <vector>

#include "srgnn/model.hpp"

namespace srgnn {

// 1 + (items scoring strictly higher) + (tied items with a smaller id).
std::size_t rank_of_target(std::span<const double> scores, ItemId target);
std::size_t rank_of_target(const Eigen::Ref<const Eigen::RowVectorXd>& scores, ItemId target);

enum class LengthGroup { Short, Long };

struct GroupMetrics {
  double p_at_k = 0;
  double mrr_at_k = 0;
  double share = 0;
  std::size_t n_samples = 0;
};

struct EvalReport {
  double p_at_k = 0;
  double mrr_at_k = 0;
  int k = 20;
  std::size_t n_samples = 0;
  // empty groups are absent rather than zero
  std::map<LengthGroup, GroupMetrics> groups;
};

EvalReport report_from_ranks(std::span<const std::size_t> ranks, int k = 20);

// Splits by prefix length: Short is <= pivot, Long is > pivot.
EvalReport grouped_report_from_ranks(std::span<const std::size_t> ranks,
                                     std::span<const std::size_t> prefix_lengths, int k = 20,
                                     std::size_t pivot = 5);

// Rank of each labelled sample's target, scored in batches.
std::vector<std::size_t> target_ranks(const Model& model, std::span<const Session> samples,
                                      std::size_t batch_size = 100);

EvalReport evaluate(const Model& model, std::span<const Session> samples, int k = 20);

EvalReport length_group_report(const Model& model, std::span<const Session> samples, int k = 20,
                               std::size_t pivot = 5);

std::string format_table(const EvalReport& report);
std::string format_key_values(const EvalReport& report);

}  // namespace srgnn
