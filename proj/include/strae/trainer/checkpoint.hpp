#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "strae/model/params.hpp"
#include "strae/trainer/adam.hpp"
#include "strae/trainer/config.hpp"

namespace strae::train {

/// Resumable training state. On disk: a plain-text manifest (config,
/// tensor names, shapes, byte offsets) and a raw little-endian float64
/// blob named "<manifest>.bin".
struct Checkpoint {
  TrainConfig config;
  model::ModelParams params;
  AdamState adam;
  /// Number of completed epochs.
  std::size_t epoch = 0;
  std::vector<double> dev_loss_history;
  /// Serialized std::mt19937_64 state.
  std::string rng_state;
};

/// Writes the blob, then the manifest, each atomically.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& manifest);
Checkpoint load_checkpoint(const std::filesystem::path& manifest);

std::filesystem::path blob_path(const std::filesystem::path& manifest);

}  // namespace strae::train
