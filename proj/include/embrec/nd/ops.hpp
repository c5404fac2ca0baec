#pragma once

// Differentiable operations over Graph nodes. Only the layer set used by the
// user and audio branches is provided; there is no general broadcasting.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "embrec/nd/graph.hpp"

namespace embrec::nd {

struct PoolWindow {
  std::size_t height = 2;
  std::size_t width = 2;
};

// input [C_in,H,W], kernel [C_out,C_in,kH,kW] -> [C_out,H',W'] with
// H' = floor((H + 2*padding - kH) / stride) + 1.
Var conv2d(Var input, Var kernel, std::size_t stride, std::size_t padding);

// Adds bias[c] to every cell of channel c of a [C,...] tensor.
Var add_channel_bias(Var input, Var bias);

// Floor semantics: trailing rows/columns that do not fill a window are dropped.
// Gradient goes to the first maximum in row-major scan order.
Var maxpool2d(Var input, PoolWindow window);

// [C,H,W] -> [C], mean over the spatial cells.
Var global_avg_pool(Var input);

// weight [m,n] * input [n] + bias [m]
Var dense(Var input, Var weight, Var bias);

enum class ActivationKind { relu, leaky_relu };

struct Activation {
  ActivationKind kind = ActivationKind::relu;
  float slope = 0.0f;  // negative-side slope for leaky_relu

  static Activation relu() { return {ActivationKind::relu, 0.0f}; }
  static Activation leaky(float slope) { return {ActivationKind::leaky_relu, slope}; }
};

// At x == 0 the derivative takes the negative-side slope.
Var activation(Var input, Activation kind);
inline Var relu(Var input) { return activation(input, Activation::relu()); }
inline Var leaky_relu(Var input, float slope) {
  return activation(input, Activation::leaky(slope));
}

// u.r / (|u| |r|) as a single-element tensor. Throws DegenerateInputError when
// either norm is zero.
Var cosine_similarity(Var u, Var r);

Var sum(Var input);

// Same values, new shape with an equal element count.
Var reshape(Var input, Shape shape);

// Mean of the selected rows of table [V,d]; zero vector for an empty id list.
Var embedding_mean(Var table, std::span<const std::uint32_t> ids);

// Concatenation of rank-1 tensors.
Var concat(std::span<const Var> parts);

// Stacks single-element tensors into a rank-1 tensor.
Var stack(std::span<const Var> scalars);

// logits[i] = dot(table[ids[i]], query)
Var gather_dot(Var table, std::span<const std::uint32_t> ids, Var query);

// -log softmax(logits)[target]
Var softmax_cross_entropy(Var logits, std::size_t target);

// sum_i max(0, margin - positive + negatives[i]); positive is a single element.
Var margin_ranking(Var positive, Var negatives, float margin);

// -label log sigmoid(z) - (1 - label) log(1 - sigmoid(z)) for scalar z.
Var sigmoid_cross_entropy(Var logit, float label);

}  // namespace embrec::nd
