#include "embrec/model/objective.hpp"

#include <array>

#include "embrec/errors.hpp"
#include "embrec/model/audio_cnn.hpp"
#include "embrec/model/losses.hpp"
#include "embrec/nd/ops.hpp"

namespace embrec::model {

AnchorTable AnchorTable::frozen(serving::EmbeddingStore ue) {
  AnchorTable t;
  for (std::size_t r = 0; r < ue.size(); ++r) t.users_.add(ue.id(r));
  t.store_ = std::move(ue);
  return t;
}

AnchorTable AnchorTable::lookup(const std::vector<std::string>& users) {
  AnchorTable t;
  t.lookup_ = true;
  for (const auto& u : users) t.users_.add(u);
  return t;
}

nd::Var user_anchor(nd::Graph& g, const VariantConfig& variant, const nd::ParameterSet& params,
                    const AnchorTable& anchors, const std::string& user) {
  if (variant.uses_lookup_anchor() != anchors.is_lookup()) {
    throw ContractError("user_anchor: anchor table does not match variant " + variant.label());
  }
  const std::uint32_t row = anchors.index(user);
  if (anchors.is_lookup()) {
    const nd::Tensor& table = params.at("user_lookup.weight");
    if (row >= table.dim(0)) throw VocabularyError("user_anchor: no lookup row for " + user);
    const std::array<std::uint32_t, 1> ids{row};
    return nd::embedding_mean(g.parameter("user_lookup.weight", table), ids);
  }
  const auto v = anchors.store().vector(row);
  return g.constant(nd::Tensor({v.size()}, std::vector<float>(v.begin(), v.end())));
}

nd::Var group_loss(nd::Graph& g, const VariantConfig& variant, const nd::ParameterSet& params,
                   const AnchorTable& anchors, const ExampleGroup& group) {
  if (group.positive == nullptr) throw ContractError("group_loss: missing positive segment");
  const nd::Var u = user_anchor(g, variant, params, anchors, group.user);
  const auto embed = [&](const audio::LogMelSegment& s) {
    return audio_cnn(g, params, g.constant(segment_tensor(s)));
  };
  const nd::Var r = embed(*group.positive);
  if (variant.kind == VariantKind::basic_binary) return binary_loss(u, r, group.label);
  std::vector<nd::Var> negs;
  negs.reserve(group.negatives.size());
  for (const auto* s : group.negatives) negs.push_back(embed(*s));
  if (variant.kind == VariantKind::multi) return multi_loss(u, r, negs);
  return hinge_loss(u, r, negs, variant.margin);
}

}  // namespace embrec::model
