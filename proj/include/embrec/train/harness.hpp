#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "embrec/audio/spectrogram.hpp"
#include "embrec/data/manifest.hpp"
#include "embrec/eval/metrics.hpp"
#include "embrec/model/objective.hpp"
#include "embrec/nd/parameters.hpp"
#include "embrec/serving/store.hpp"
#include "embrec/train/config.hpp"
#include "embrec/train/split.hpp"

namespace embrec::train {

// Log-mel spectrogram per track id.
using AudioCache = std::map<std::string, audio::LogMelSpectrogram>;

// Reads <dir>/<id>.lmel for every id; IngestionError names the missing ones.
AudioCache load_audio_cache(const std::filesystem::path& dir, const std::vector<std::string>& ids);

// Track ids referenced by the rows, sorted and unique.
std::vector<std::string> referenced_tracks(const std::vector<data::Interaction>& rows);

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_precision = 0.0;  // NaN when nothing scores above the threshold
  double val_auc = 0.0;
};

struct TrainingRun {
  nd::ParameterSet params;  // best-validation-AUC epoch, or the initialization
  std::vector<EpochMetrics> log;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
  double best_auc = 0.0;
};

// Fresh CNN parameters for the variant; dcue also gets one lookup row per
// anchor-table user.
nd::ParameterSet init_experiment_params(const ExperimentConfig& config,
                                        const model::AnchorTable& anchors);

// Per epoch: resample segments, rebuild and shuffle example groups, Nesterov
// steps over batches, then validation precision/AUC. Stops after `patience`
// epochs without a better validation AUC. IngestionError when a referenced
// track has no audio.
TrainingRun run_training(const ExperimentConfig& config, const Splits& splits,
                         const AudioCache& audio, const model::AnchorTable& anchors,
                         const nd::ParameterSet* init = nullptr);

// Audio embedding of every track from its center segment.
serving::EmbeddingStore export_audio_embeddings(const nd::ParameterSet& params,
                                                const AudioCache& audio, double context_duration);

// cos(AE, anchor) for every row, AE from the center segment.
std::vector<eval::ScoredPair> score_rows(const ExperimentConfig& config,
                                         const nd::ParameterSet& params,
                                         const model::AnchorTable& anchors,
                                         const std::vector<data::Interaction>& rows,
                                         const AudioCache& audio);

// Tab-separated: epoch, train_loss, val_precision, val_auc with a header.
void write_metrics_log(const std::filesystem::path& path, const std::vector<EpochMetrics>& log);
std::string format_metrics_log(const std::vector<EpochMetrics>& log);

}  // namespace embrec::train
