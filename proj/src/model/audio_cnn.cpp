#include "embrec/model/audio_cnn.hpp"

#include <algorithm>
#include <cmath>

#include "embrec/errors.hpp"
#include "embrec/nd/ops.hpp"
#include "embrec/rng.hpp"

namespace embrec::model {

using nd::Tensor;
using nd::Var;

nd::ParameterSet init_audio_params(const AudioCnnConfig& config, std::uint64_t seed,
                                   std::size_t n_users) {
  if (config.channels.empty()) throw ContractError("audio cnn: at least one conv stage required");
  nd::ParameterSet p;
  std::size_t in = 1;
  for (std::size_t i = 0; i < config.channels.size(); ++i) {
    const std::size_t out = config.channels[i];
    const std::string stem = "conv" + std::to_string(i + 1);
    p.emplace(stem + ".weight",
              nd::glorot_uniform({out, in, 3, 3}, in * 9, out * 9, Rng::mix(seed, 100 + i)));
    p.emplace(stem + ".bias", Tensor({out}, 0.0f));
    in = out;
  }
  p.emplace("proj.weight",
            nd::glorot_uniform({config.out_dim, in}, in, config.out_dim, Rng::mix(seed, 200)));
  p.emplace("proj.bias", Tensor({config.out_dim}, 0.0f));
  if (n_users > 0) {
    p.emplace("user_lookup.weight", nd::glorot_uniform({n_users, config.out_dim}, config.out_dim,
                                                        config.out_dim, Rng::mix(seed, 300)));
  }
  return p;
}

AudioCnnConfig config_from_params(const nd::ParameterSet& params) {
  AudioCnnConfig c;
  c.channels.clear();
  for (std::size_t i = 1;; ++i) {
    const auto it = params.find("conv" + std::to_string(i) + ".weight");
    if (it == params.end()) break;
    c.channels.push_back(it->second.dim(0));
  }
  if (c.channels.empty() || !params.count("proj.weight")) {
    throw FormatError("audio cnn: checkpoint lacks conv or projection parameters");
  }
  c.out_dim = params.at("proj.weight").dim(0);
  return c;
}

Var cnn_forward(Var input, std::span<const Var> kernels, std::span<const Var> biases,
                Var proj_weight, Var proj_bias) {
  if (kernels.size() != biases.size() || kernels.empty()) {
    throw ContractError("cnn_forward: kernels and biases must pair up");
  }
  const nd::Shape& s = input.shape();
  if (s.size() != 3) throw DimensionError("cnn_forward: input must be [1, bins, frames]");
  const std::size_t need = std::size_t{1} << kernels.size();
  if (s[1] < need || s[2] < need) {
    throw DimensionError("cnn_forward: segment " + nd::to_string(s) + " is too short for " +
                         std::to_string(kernels.size()) + " pooling stages (needs >= " +
                         std::to_string(need) + " per side)");
  }
  Var x = input;
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    x = nd::add_channel_bias(nd::conv2d(x, kernels[i], 1, 1), biases[i]);
    x = nd::maxpool2d(nd::relu(x), {2, 2});
  }
  return nd::dense(nd::global_avg_pool(x), proj_weight, proj_bias);
}

Var audio_cnn(nd::Graph& g, const nd::ParameterSet& params, Var segment) {
  std::vector<Var> kernels, biases;
  for (std::size_t i = 1;; ++i) {
    const std::string stem = "conv" + std::to_string(i);
    const auto it = params.find(stem + ".weight");
    if (it == params.end()) break;
    kernels.push_back(g.parameter(stem + ".weight", it->second));
    biases.push_back(g.parameter(stem + ".bias", params.at(stem + ".bias")));
  }
  return cnn_forward(segment, kernels, biases, g.parameter("proj.weight", params.at("proj.weight")),
                     g.parameter("proj.bias", params.at("proj.bias")));
}

Tensor segment_tensor(const audio::LogMelSegment& segment) {
  return Tensor({1, segment.bins, segment.frames}, segment.values);
}

Tensor embed_segment(const nd::ParameterSet& params, const audio::LogMelSegment& segment) {
  nd::Graph g;
  return audio_cnn(g, params, g.constant(segment_tensor(segment))).value();
}

double score_track(std::span<const float> u, const audio::LogMelSegment& segment,
                   const nd::ParameterSet& params) {
  nd::Graph g;
  Var ae = audio_cnn(g, params, g.constant(segment_tensor(segment)));
  Var anchor = g.constant(Tensor({u.size()}, std::vector<float>(u.begin(), u.end())));
  return nd::cosine_similarity(ae, anchor).value().item();
}

}  // namespace embrec::model
