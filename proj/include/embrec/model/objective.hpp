#pragma once

#include <string>
#include <vector>

#include "embrec/audio/spectrogram.hpp"
#include "embrec/model/variant.hpp"
#include "embrec/nd/graph.hpp"
#include "embrec/nd/parameters.hpp"
#include "embrec/serving/store.hpp"
#include "embrec/vocab.hpp"

namespace embrec::model {

// Where the user side of a pair comes from. Frozen tables serve UEs exported
// by the user branch; lookup tables index rows of user_lookup.weight.
class AnchorTable {
 public:
  static AnchorTable frozen(serving::EmbeddingStore ue);
  static AnchorTable lookup(const std::vector<std::string>& users);

  bool is_lookup() const { return lookup_; }
  std::size_t size() const { return users_.size(); }
  const Vocabulary& users() const { return users_; }
  // Throws VocabularyError for unknown users.
  std::uint32_t index(const std::string& user) const { return users_.at(user); }
  const serving::EmbeddingStore& store() const { return store_; }

 private:
  bool lookup_ = false;
  Vocabulary users_{"user"};
  serving::EmbeddingStore store_;
};

// Trainable lookup row for dcue, a constant frozen UE otherwise. The table has
// to match the variant.
nd::Var user_anchor(nd::Graph& g, const VariantConfig& variant, const nd::ParameterSet& params,
                    const AnchorTable& anchors, const std::string& user);

// One training unit: a user, a positive (or, for basic_binary, a labelled)
// segment and the negatives.
struct ExampleGroup {
  std::string user;
  const audio::LogMelSegment* positive = nullptr;
  std::vector<const audio::LogMelSegment*> negatives;
  int label = 1;
};

// Loss of one group under the variant's objective: hinge for metric and dcue,
// softmax for multi, sigmoid for basic_binary. Every segment goes through the
// same CNN parameters.
nd::Var group_loss(nd::Graph& g, const VariantConfig& variant, const nd::ParameterSet& params,
                   const AnchorTable& anchors, const ExampleGroup& group);

}  // namespace embrec::model
