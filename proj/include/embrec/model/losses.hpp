#pragma once

#include <span>

#include "embrec/nd/graph.hpp"

namespace embrec::model {

// sum_i max(0, margin - cos(r_pos, u) + cos(r_neg_i, u))
nd::Var hinge_loss(nd::Var u, nd::Var r_pos, std::span<const nd::Var> r_negs, float margin);

// Sigmoid cross-entropy on cos(r, u); label is 0 or 1.
nd::Var binary_loss(nd::Var u, nd::Var r, int label);

// -log softmax([cos(r_pos, u), cos(r_neg_1, u), ...])[0]
nd::Var multi_loss(nd::Var u, nd::Var r_pos, std::span<const nd::Var> r_negs);

}  // namespace embrec::model
