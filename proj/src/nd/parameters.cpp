#include "embrec/nd/parameters.hpp"

#include <cmath>

#include "embrec/binary_io.hpp"
#include "embrec/errors.hpp"
#include "embrec/rng.hpp"
#include "embrec/simd/kernels.hpp"

namespace embrec::nd {

Tensor glorot_uniform(const Shape& shape, std::size_t fan_in, std::size_t fan_out,
                      std::uint64_t seed) {
  Tensor t(shape);
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Rng rng(seed);
  for (float& v : t.values()) v = static_cast<float>(rng.uniform(-limit, limit));
  return t;
}

void add_scaled(GradMap& target, const GradMap& source, float alpha) {
  for (const auto& [name, g] : source) {
    auto it = target.find(name);
    if (it == target.end()) {
      Tensor scaled(g.shape(), 0.0f);
      simd::active().axpy(alpha, g.data(), scaled.data(), g.size());
      target.emplace(name, std::move(scaled));
      continue;
    }
    if (it->second.shape() != g.shape()) {
      throw DimensionError("gradient '" + name + "' shape mismatch");
    }
    simd::active().axpy(alpha, g.data(), it->second.data(), g.size());
  }
}

std::string encode_checkpoint(const ParameterSet& params) {
  io::ByteWriter w;
  w.bytes("EMBR");
  w.u16(kCheckpointVersion);
  for (const auto& [name, t] : params) {
    if (name.size() > 0xFFFF) throw ContractError("parameter name too long: " + name);
    if (t.rank() > 0xFF) throw ContractError("tensor rank too large: " + name);
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name);
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    w.f32s(t.data(), t.size());
  }
  return w.buffer();
}

ParameterSet decode_checkpoint(std::string_view bytes) {
  io::ByteReader r(bytes, "checkpoint");
  if (r.bytes(4) != "EMBR") throw FormatError("checkpoint: bad magic");
  const std::uint16_t version = r.u16();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  ParameterSet params;
  while (!r.done()) {
    const std::uint16_t len = r.u16();
    std::string name(r.bytes(len));
    const std::uint8_t rank = r.u8();
    if (rank == 0) throw FormatError("checkpoint: zero-rank tensor '" + name + "'");
    Shape shape(rank);
    std::size_t count = 1;
    for (auto& d : shape) {
      d = r.u32();
      if (d == 0) throw FormatError("checkpoint: zero dimension in '" + name + "'");
      count *= d;
    }
    if (count > r.remaining() / 4) throw FormatError("checkpoint: truncated payload for '" + name + "'");
    Tensor t(shape);
    r.f32s(t.data(), count);
    if (!params.emplace(std::move(name), std::move(t)).second) {
      throw FormatError("checkpoint: duplicate tensor name");
    }
  }
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params) {
  io::write_file_atomic(path, encode_checkpoint(params));
}

ParameterSet load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path));
}

}  // namespace embrec::nd
