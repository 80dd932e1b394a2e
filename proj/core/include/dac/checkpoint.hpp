#pragma once

#include <string>

#include "dac/trainer.hpp"

namespace dac {

// Versioned JSON checkpoint: architecture identifiers, named parameter
// arrays for the denoiser and all four critics, optimizer moments, and
// training progress. Loading fails loudly on any architecture or shape
// mismatch.
inline constexpr int kCheckpointVersion = 1;

struct CheckpointMeta {
  int stage = 1;
  int episodes_run = 0;
  std::uint64_t seed = 0;
};

void save_checkpoint(const std::string& path, Trainer& trainer,
                     const CheckpointMeta& meta);

// Restores parameters and optimizer state into an already-constructed
// trainer whose architecture must match the file.
CheckpointMeta load_checkpoint(const std::string& path, Trainer& trainer);

}  // namespace dac
