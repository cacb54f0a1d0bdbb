#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "strae/model/strae.hpp"
#include "strae/objectives/losses.hpp"

namespace strae::train {

enum class ModelKind { strae, iornn, self_strae };

std::string to_string(ModelKind m);
ModelKind parse_model_kind(const std::string& text);
model::Architecture architecture_of(ModelKind m);

/// Full description of one training run. The flat key/value file format
/// uses exactly these field names as keys.
struct TrainConfig {
  objectives::Objective objective = objectives::Objective::contrastive;
  ModelKind model = ModelKind::strae;
  model::StructureSource structure_source = model::StructureSource::balanced;
  std::size_t n = 10;
  /// Unset means 1e-3 for cross entropy and 1e-4 otherwise.
  std::optional<double> lr;
  std::size_t batch_size = 128;
  std::size_t epochs = 15;
  double tau = 0.2;
  double r = 0.1;
  std::uint64_t seed = 0;

  std::filesystem::path vocab;
  std::filesystem::path corpus;
  std::filesystem::path dev_corpus;
  std::filesystem::path tree_file;
  std::filesystem::path dev_tree_file;
  std::filesystem::path checkpoint_dir;

  bool deterministic = true;
  bool lowercase = true;
  bool intra_view_negatives = false;
  std::size_t max_length = 128;
  /// Global gradient-norm clipping threshold; 0 disables clipping.
  double clip_norm = 0.0;
  std::size_t threads = 1;

  double learning_rate() const;
  /// Throws InputError on inconsistent settings (e.g. self_strae without
  /// induced structure).
  void validate() const;

  /// "key = value" lines in a fixed key order.
  std::string to_text() const;
  static TrainConfig from_text(const std::string& text);
  static TrainConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Sets one field from its textual value; unknown keys are errors.
  void set(const std::string& key, const std::string& value);
};

/// Shortest text that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace strae::train
