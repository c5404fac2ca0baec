#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "embrec/model/audio_cnn.hpp"
#include "embrec/model/variant.hpp"
#include "embrec/train/optimizer.hpp"
#include "embrec/train/split.hpp"

namespace embrec::train {

struct ExperimentConfig {
  model::VariantConfig variant{};
  std::size_t batch_size = 32;
  std::size_t epochs = 20;
  std::size_t patience = 5;
  std::uint64_t seed = 42;
  OptimizerConfig optimizer{};
  SplitMode split_mode = SplitMode::per_user;
  model::AudioCnnConfig cnn{};

  // Throws ContractError on out-of-range values.
  void validate() const;
};

// "key = value" lines; '#' starts a comment. Keys: variant, n_negatives,
// margin, context_duration_s, batch_size, epochs, patience, seed, lr0,
// momentum, decay, split_mode, channels (comma-separated widths). Unknown
// keys and malformed values are ParseErrors naming the line.
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin = "config");
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Round-trips through parse_experiment_config.
std::string format_experiment_config(const ExperimentConfig& config);

}  // namespace embrec::train
