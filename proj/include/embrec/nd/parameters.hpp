#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "embrec/nd/graph.hpp"
#include "embrec/nd/tensor.hpp"

namespace embrec::nd {

// Named trainable tensors of one model.
using ParameterSet = std::map<std::string, Tensor>;

// Uniform in [-a, a] with a = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(const Shape& shape, std::size_t fan_in, std::size_t fan_out,
                      std::uint64_t seed);

// target += alpha * source for every gradient; shapes must agree.
void add_scaled(GradMap& target, const GradMap& source, float alpha = 1.0f);

// Checkpoint file: "EMBR", u16 version, then per tensor: u16 name length,
// name bytes, u8 rank, u32 dims, little-endian float32 payload.
inline constexpr std::uint16_t kCheckpointVersion = 1;

std::string encode_checkpoint(const ParameterSet& params);
ParameterSet decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params);
ParameterSet load_checkpoint(const std::filesystem::path& path);

}  // namespace embrec::nd
