#include "srgnn/evaluator.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "srgnn/errors.hpp"

namespace srgnn {

std::size_t rank_of_target(std::span<const double> scores, ItemId target) {
  if (target >= scores.size()) {
    throw ContractError("rank_of_target: target " + std::to_string(target) + " outside " +
                        std::to_string(scores.size()) + " scores");
  }
  const double t = scores[target];
  if (!std::isfinite(t)) throw NumericError("rank_of_target: non-finite target score");
  std::size_t rank = 1;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const double s = scores[j];
    if (!std::isfinite(s)) throw NumericError("rank_of_target: non-finite score");
    if (s > t || (s == t && j < target)) ++rank;
  }
  return rank;
}

std::size_t rank_of_target(const Eigen::Ref<const Eigen::RowVectorXd>& scores, ItemId target) {
  const Eigen::RowVectorXd row = scores;
  return rank_of_target(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())),
                        target);
}

namespace {

void accumulate_metrics(std::span<const std::size_t> ranks, int k, double& p, double& mrr) {
  double hits = 0;
  double rr = 0;
  for (std::size_t r : ranks) {
    if (r >= 1 && r <= static_cast<std::size_t>(k)) {
      hits += 1.0;
      rr += 1.0 / double(r);
    }
  }
  p = hits / double(ranks.size());
  mrr = rr / double(ranks.size());
}

}  // namespace

EvalReport report_from_ranks(std::span<const std::size_t> ranks, int k) {
  if (ranks.empty()) throw ContractError("evaluate: empty test set");
  if (k < 1) throw ContractError("evaluate: k must be positive");
  EvalReport r;
  r.k = k;
  r.n_samples = ranks.size();
  accumulate_metrics(ranks, k, r.p_at_k, r.mrr_at_k);
  return r;
}

EvalReport grouped_report_from_ranks(std::span<const std::size_t> ranks,
                                     std::span<const std::size_t> prefix_lengths, int k,
                                     std::size_t pivot) {
  if (ranks.size() != prefix_lengths.size()) {
    throw DimensionError("grouped_report_from_ranks: " + std::to_string(ranks.size()) +
                         " ranks vs " + std::to_string(prefix_lengths.size()) + " lengths");
  }
  EvalReport report = report_from_ranks(ranks, k);
  std::vector<std::size_t> short_ranks, long_ranks;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    (prefix_lengths[i] <= pivot ? short_ranks : long_ranks).push_back(ranks[i]);
  }
  auto add = [&](LengthGroup g, const std::vector<std::size_t>& rs) {
    if (rs.empty()) return;
    GroupMetrics m;
    m.n_samples = rs.size();
    m.share = double(rs.size()) / double(ranks.size());
    accumulate_metrics(rs, k, m.p_at_k, m.mrr_at_k);
    report.groups[g] = m;
  };
  add(LengthGroup::Short, short_ranks);
  add(LengthGroup::Long, long_ranks);
  return report;
}

std::vector<std::size_t> target_ranks(const Model& model, std::span<const Session> samples,
                                      std::size_t batch_size) {
  std::vector<std::size_t> ranks;
  ranks.reserve(samples.size());
  batch_size = std::max<std::size_t>(1, batch_size);
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const auto batch = samples.subspan(start, std::min(batch_size, samples.size() - start));
    const Eigen::MatrixXd scores = score_sessions(model, batch);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (!batch[i].label) throw ContractError("evaluate: sample without label");
      ranks.push_back(rank_of_target(scores.row(static_cast<Eigen::Index>(i)), *batch[i].label));
    }
  }
  return ranks;
}

EvalReport evaluate(const Model& model, std::span<const Session> samples, int k) {
  if (samples.empty()) throw ContractError("evaluate: empty test set");
  const auto ranks = target_ranks(model, samples);
  return report_from_ranks(ranks, k);
}

EvalReport length_group_report(const Model& model, std::span<const Session> samples, int k,
                               std::size_t pivot) {
  if (samples.empty()) throw ContractError("evaluate: empty test set");
  const auto ranks = target_ranks(model, samples);
  std::vector<std::size_t> lengths;
  lengths.reserve(samples.size());
  for (const auto& s : samples) lengths.push_back(s.items.size());
  return grouped_report_from_ranks(ranks, lengths, k, pivot);
}

namespace {

const char* group_name(LengthGroup g) { return g == LengthGroup::Short ? "short" : "long"; }

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

}  // namespace

std::string format_table(const EvalReport& r) {
  std::ostringstream os;
  const std::string k = std::to_string(r.k);
  os << "group    samples    share     P@" << k << "     MRR@" << k << "\n";
  auto line = [&](const std::string& name, std::size_t n, double share, double p, double mrr) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-8s %8zu %8.3f %8.2f %8.2f\n", name.c_str(), n, share,
                  100.0 * p, 100.0 * mrr);
    os << buf;
  };
  line("all", r.n_samples, 1.0, r.p_at_k, r.mrr_at_k);
  for (const auto& [g, m] : r.groups) line(group_name(g), m.n_samples, m.share, m.p_at_k, m.mrr_at_k);
  return os.str();
}

std::string format_key_values(const EvalReport& r) {
  std::ostringstream os;
  os << "k=" << r.k << "\n";
  os << "n_samples=" << r.n_samples << "\n";
  os << "p_at_k=" << fmt("%.17g", r.p_at_k) << "\n";
  os << "mrr_at_k=" << fmt("%.17g", r.mrr_at_k) << "\n";
  for (const auto& [g, m] : r.groups) {
    const std::string prefix = group_name(g);
    os << prefix << ".n_samples=" << m.n_samples << "\n";
    os << prefix << ".share=" << fmt("%.17g", m.share) << "\n";
    os << prefix << ".p_at_k=" << fmt("%.17g", m.p_at_k) << "\n";
    os << prefix << ".mrr_at_k=" << fmt("%.17g", m.mrr_at_k) << "\n";
  }
  return os.str();
}

}  // namespace srgnn
