#include "embrec/model/losses.hpp"

#include <vector>

#include "embrec/errors.hpp"
#include "embrec/nd/ops.hpp"

namespace embrec::model {
namespace {

nd::Var negative_similarities(nd::Var u, std::span<const nd::Var> r_negs) {
  std::vector<nd::Var> sims;
  sims.reserve(r_negs.size());
  for (const nd::Var& r : r_negs) sims.push_back(nd::cosine_similarity(r, u));
  return nd::stack(sims);
}

}  // namespace

nd::Var hinge_loss(nd::Var u, nd::Var r_pos, std::span<const nd::Var> r_negs, float margin) {
  if (r_negs.empty()) throw ContractError("hinge_loss: at least one negative required");
  if (!(margin > 0.0f)) throw ContractError("hinge_loss: margin must be positive");
  return nd::margin_ranking(nd::cosine_similarity(r_pos, u), negative_similarities(u, r_negs),
                            margin);
}

nd::Var binary_loss(nd::Var u, nd::Var r, int label) {
  if (label != 0 && label != 1) throw ContractError("binary_loss: label must be 0 or 1");
  return nd::sigmoid_cross_entropy(nd::cosine_similarity(r, u), static_cast<float>(label));
}

nd::Var multi_loss(nd::Var u, nd::Var r_pos, std::span<const nd::Var> r_negs) {
  if (r_negs.empty()) throw ContractError("multi_loss: at least one negative required");
  std::vector<nd::Var> sims{nd::cosine_similarity(r_pos, u)};
  for (const nd::Var& r : r_negs) sims.push_back(nd::cosine_similarity(r, u));
  return nd::softmax_cross_entropy(nd::stack(sims), 0);
}

}  // namespace embrec::model
