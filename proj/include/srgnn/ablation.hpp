#pragma once

#include <span>
#include <string>
#include <vector>

#include "srgnn/evaluator.hpp"
#include "srgnn/trainer.hpp"

namespace srgnn {

struct AblationRow {
  ConnectionScheme connection = ConnectionScheme::Standard;
  ReadoutMode readout = ReadoutMode::Hybrid;
  EvalReport report;
  double final_train_loss = 0;
};

// Trains and evaluates one model per (connection, readout) pair, each from
// the same base config and seed. Rows come out connection-major.
std::vector<AblationRow> run_ablation(const TrainConfig& base, std::size_t catalog,
                                      std::span<const Session> train,
                                      std::span<const Session> validation,
                                      std::span<const Session> test, const GlobalGraph& global,
                                      std::span<const ConnectionScheme> connections,
                                      std::span<const ReadoutMode> readouts);

std::string format_ablation(const std::vector<AblationRow>& rows, int k);

}  // namespace srgnn
