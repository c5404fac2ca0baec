#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "embrec/audio/spectrogram.hpp"
#include "embrec/nd/graph.hpp"
#include "embrec/nd/parameters.hpp"

namespace embrec::model {

inline constexpr std::size_t kEmbeddingDim = 40;

struct AudioCnnConfig {
  std::vector<std::size_t> channels{32, 64, 64, 128, 128};
  std::size_t out_dim = kEmbeddingDim;
};

// conv{i}.weight [C_i, C_{i-1}, 3, 3], conv{i}.bias, proj.weight [40, C_5],
// proj.bias. With n_users > 0 also user_lookup.weight [n_users, 40].
nd::ParameterSet init_audio_params(const AudioCnnConfig& config, std::uint64_t seed,
                                   std::size_t n_users = 0);

// Reads the channel widths back from a parameter set.
AudioCnnConfig config_from_params(const nd::ParameterSet& params);

// Stages of conv 3x3 (pad 1) + bias, ReLU, maxpool 2x2, then global average and
// a linear projection. input is [1, bins, frames]; each spatial side must
// survive every pooling stage, otherwise DimensionError.
nd::Var cnn_forward(nd::Var input, std::span<const nd::Var> kernels,
                    std::span<const nd::Var> biases, nd::Var proj_weight, nd::Var proj_bias);

// Registers the CNN parameters on g and runs cnn_forward.
nd::Var audio_cnn(nd::Graph& g, const nd::ParameterSet& params, nd::Var segment);

nd::Tensor segment_tensor(const audio::LogMelSegment& segment);

// AE of one segment.
nd::Tensor embed_segment(const nd::ParameterSet& params, const audio::LogMelSegment& segment);

// cos(AE, u) in [-1, 1].
double score_track(std::span<const float> u, const audio::LogMelSegment& segment,
                   const nd::ParameterSet& params);

}  // namespace embrec::model
