#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "srgnn/trainer.hpp"

namespace srgnn {

// Binary checkpoint, layout documented in docs/checkpoint_format.md.
struct Checkpoint {
  TrainConfig config;
  Model model;
  AdamState adam;
  std::uint64_t epoch = 0;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace srgnn
