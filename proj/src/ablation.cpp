#include "srgnn/ablation.hpp"

#include <cstdio>
#include <sstream>

namespace srgnn {

std::vector<AblationRow> run_ablation(const TrainConfig& base, std::size_t catalog,
                                      std::span<const Session> train_samples,
                                      std::span<const Session> validation,
                                      std::span<const Session> test, const GlobalGraph& global,
                                      std::span<const ConnectionScheme> connections,
                                      std::span<const ReadoutMode> readouts) {
  std::vector<AblationRow> rows;
  for (ConnectionScheme scheme : connections) {
    for (ReadoutMode mode : readouts) {
      TrainConfig config = base;
      config.model.connection = scheme;
      config.model.readout = mode;
      const TrainResult result = srgnn::train(config, catalog, train_samples, validation, global);
      AblationRow row;
      row.connection = scheme;
      row.readout = mode;
      row.report = evaluate(result.model, test, config.k);
      row.final_train_loss = result.history.empty() ? 0.0 : result.history.back().mean_loss;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string format_ablation(const std::vector<AblationRow>& rows, int k) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %-8s %10s %10s %12s\n", "connection", "readout",
                ("P@" + std::to_string(k)).c_str(), ("MRR@" + std::to_string(k)).c_str(),
                "train_loss");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-10s %-8s %10.2f %10.2f %12.6f\n",
                  std::string(to_string(r.connection)).c_str(),
                  std::string(to_string(r.readout)).c_str(), 100.0 * r.report.p_at_k,
                  100.0 * r.report.mrr_at_k, r.final_train_loss);
    os << buf;
  }
  return os.str();
}

}  // namespace srgnn
