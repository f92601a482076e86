#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>

#include "autoreset/train/trainer.hpp"

namespace autoreset::harness {

/// A checkpoint directory (manifest.txt + arrays.bin) holds the config echo
/// (`config.<key>` meta entries), the seed, the global step, the number of
/// metrics rows logged so far and the trainer's full state.
void save_checkpoint(const train::Trainer& trainer, std::int64_t metrics_rows, const std::filesystem::path& dir);

struct LoadedCheckpoint {
  std::unique_ptr<train::Trainer> trainer;
  std::int64_t metrics_rows = 0;
};

/// Rebuilds the trainer from the echoed config and restores its state.
/// Throws nn::ArchiveError on a corrupt or truncated checkpoint.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace autoreset::harness
