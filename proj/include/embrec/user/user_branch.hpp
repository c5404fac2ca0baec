#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "embrec/data/manifest.hpp"
#include "embrec/nd/graph.hpp"
#include "embrec/nd/parameters.hpp"
#include "embrec/serving/store.hpp"
#include "embrec/train/optimizer.hpp"
#include "embrec/vocab.hpp"

namespace embrec::user {

inline constexpr std::size_t kEmbeddingDim = 40;

struct UserVocab {
  Vocabulary tracks{"track"};
  Vocabulary albums{"album"};
  Vocabulary artists{"artist"};
  Vocabulary demographics{"demographic feature"};
};

// Every id that appears in the manifests.
UserVocab build_vocab(const std::vector<data::Interaction>& rows, const data::Demographics& demo);

// Sidecar text file: one "kind<TAB>id" line per entry, in index order.
void save_vocab(const std::filesystem::path& path, const UserVocab& vocab);
UserVocab load_vocab(const std::filesystem::path& path);

// Resolved, index-aligned history of one user.
struct UserHistory {
  std::vector<std::uint32_t> tracks;
  std::vector<std::uint32_t> albums;
  std::vector<std::uint32_t> artists;
  std::vector<std::uint32_t> demographics;
};

// Liked rows in timestamp order plus the user's demographic ids. Throws
// VocabularyError for ids missing from the vocabulary.
UserHistory history_from(const UserVocab& vocab, const std::vector<const data::Interaction*>& likes,
                         const std::vector<std::string>& demographics);

struct UserBranchConfig {
  std::size_t hidden1 = 128;
  std::size_t hidden2 = 64;
  float slope = 0.01f;
  std::size_t negatives = 20;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  train::OptimizerConfig optimizer{};
  std::uint64_t seed = 42;
};

// Parameter names: lookup.{track,album,artist,demographic}, hidden1.*, hidden2.*,
// ue.*, classes.
nd::ParameterSet init_params(const UserVocab& vocab, const UserBranchConfig& config);

// Mean of each lookup group -> concat(160) -> two leaky-ReLU layers -> linear 40.
// Registers the parameters it touches on the graph.
nd::Var user_tower(nd::Graph& g, const nd::ParameterSet& params, const UserHistory& history,
                   float slope = 0.01f);

nd::Tensor embed_user(const UserHistory& history, const nd::ParameterSet& params,
                      float slope = 0.01f);

// -log softmax over dot(ue, classes[id]) for the positive then each negative.
nd::Var sampled_class_loss(nd::Var ue, nd::Var classes, std::uint32_t positive,
                           std::span<const std::uint32_t> negatives);

// One (history prefix -> next liked track) example.
struct Example {
  UserHistory history;
  std::uint32_t target = 0;
};

// For each user, the k-th liked row (k >= 1, timestamp order) with the
// preceding likes as history.
std::vector<Example> prefix_examples(const UserVocab& vocab,
                                     const std::vector<data::Interaction>& rows,
                                     const data::Demographics& demo);

// Held-out likes as targets, each user's full `history_rows` likes as history.
std::vector<Example> heldout_examples(const UserVocab& vocab,
                                      const std::vector<data::Interaction>& history_rows,
                                      const std::vector<data::Interaction>& heldout_rows,
                                      const data::Demographics& demo);

struct TrainResult {
  nd::ParameterSet params;
  std::vector<double> train_loss;  // per epoch, mean over examples
  std::vector<double> val_loss;    // per epoch, empty without validation examples
};

// Nesterov SGD over shuffled mini-batches; k uniform negatives per example
// resampled every step. Validation loss uses a fixed negative draw.
TrainResult train_user_branch(const UserVocab& vocab, std::vector<Example> examples,
                              const std::vector<Example>& validation,
                              const UserBranchConfig& config,
                              const nd::ParameterSet* init = nullptr);

// Mean loss over examples with negatives drawn from `seed`.
double mean_loss(const nd::ParameterSet& params, const std::vector<Example>& examples,
                 std::size_t negatives, std::uint64_t seed, float slope = 0.01f);

// Track indices by descending dot(ue, classes[t]), skipping `exclude`.
std::vector<std::uint32_t> rank_tracks(const nd::ParameterSet& params, std::span<const float> ue,
                                       const std::vector<bool>& exclude);

// Per-user histories from the given rows (liked only) and demographics.
std::map<std::string, UserHistory> user_histories(const UserVocab& vocab,
                                                  const std::vector<data::Interaction>& rows,
                                                  const data::Demographics& demo);

// One UE per user; throws DegenerateInputError on a zero-norm embedding.
serving::EmbeddingStore export_user_embeddings(const nd::ParameterSet& params,
                                               const std::map<std::string, UserHistory>& users,
                                               float slope = 0.01f);

}  // namespace embrec::user
