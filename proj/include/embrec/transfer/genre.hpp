#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "embrec/serving/store.hpp"
#include "embrec/transfer/pca.hpp"
#include "embrec/transfer/svm.hpp"

namespace embrec::transfer {

struct GenreEntry {
  std::string track_id;
  std::string genre;
  std::string split;  // train, val or test
};

// Rows of track_id, genre, split. "valid"/"validation" normalise to "val".
std::vector<GenreEntry> read_genre_manifest(const std::filesystem::path& path);
void write_genre_manifest(const std::filesystem::path& path, const std::vector<GenreEntry>& rows);
std::map<std::string, std::size_t> split_counts(const std::vector<GenreEntry>& rows);

// Per genre: shuffle with the seed, first round(fraction * n) go to train, rest to test.
std::vector<GenreEntry> stratified_split(
    const std::vector<std::pair<std::string, std::string>>& track_genre, double train_fraction,
    std::uint64_t seed);

// track_id -> feature vector. File rows are a track id followed by floats.
using FeatureTable = std::map<std::string, std::vector<double>>;
FeatureTable read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, const FeatureTable& table);

struct GenreOptions {
  std::size_t pca_dim = 128;
  SvmParams svm;
};

struct ClassAccuracy {
  std::string genre;
  std::size_t correct = 0;
  std::size_t total = 0;
};

struct ConditionReport {
  std::string name;  // "baseline" or "baseline+ae"
  std::size_t feature_dim = 0;
  double accuracy = 0.0;
  std::vector<ClassAccuracy> per_class;
};

struct GenreReport {
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  std::vector<ConditionReport> conditions;
};

// Fits standardisation, PCA and the SVM on the train split and scores the
// test split, once on baseline features and, when ae is given, once on
// baseline features concatenated with the track's AE. The val split is not used.
GenreReport genre_pipeline(const std::vector<GenreEntry>& manifest, const FeatureTable& baseline,
                           const serving::EmbeddingStore* ae, const GenreOptions& options = {});

std::string format_genre_report(const GenreReport& report);

// Gaussian class clusters for exercising the pipeline: each class gets a random
// centroid in baseline space and in AE space, scaled by the separations; samples
// add unit-variance noise. Tracks are split 7:3 per class.
struct SyntheticGenreSpec {
  std::size_t n_classes = 4;
  std::size_t per_class = 100;
  std::size_t baseline_dim = 160;
  std::size_t ae_dim = 40;
  double baseline_separation = 0.5;
  double ae_separation = 0.5;
  std::uint64_t seed = 42;
};

struct SyntheticGenreSet {
  std::vector<GenreEntry> manifest;
  FeatureTable baseline;
  serving::EmbeddingStore ae;
};

SyntheticGenreSet make_synthetic_genre_set(const SyntheticGenreSpec& spec);

}  // namespace embrec::transfer
