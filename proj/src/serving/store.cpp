#include "embrec/serving/store.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "embrec/binary_io.hpp"
#include "embrec/errors.hpp"

namespace embrec::serving {
namespace {

double norm_of(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

}  // namespace

std::string_view kind_name(StoreKind kind) {
  return kind == StoreKind::user ? "user" : "audio";
}

EmbeddingStore EmbeddingStore::build(StoreKind kind, std::vector<Entry> entries, std::size_t dim) {
  if (dim == 0) throw BuildError("embedding store: zero dimension");
  EmbeddingStore s;
  s.kind_ = kind;
  s.dim_ = dim;
  s.ids_.reserve(entries.size());
  s.values_.reserve(entries.size() * dim);
  for (Entry& e : entries) {
    if (e.vector.size() != dim) {
      throw BuildError("embedding store: '" + e.id + "' has " + std::to_string(e.vector.size()) +
                       " dims, expected " + std::to_string(dim));
    }
    if (e.id.empty() || e.id.size() > 0xFFFF) throw BuildError("embedding store: bad id length");
    const double n = norm_of(e.vector);
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw BuildError("embedding store: '" + e.id + "' has zero or non-finite norm");
    }
    if (!s.index_.emplace(e.id, s.ids_.size()).second) {
      throw BuildError("embedding store: duplicate id '" + e.id + "'");
    }
    s.ids_.push_back(std::move(e.id));
    s.values_.insert(s.values_.end(), e.vector.begin(), e.vector.end());
    s.norms_.push_back(n);
  }
  return s;
}

std::span<const float> EmbeddingStore::find(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) {
    throw VocabularyError("embedding store: unknown " + std::string(kind_name(kind_)) + " '" + id +
                          "'");
  }
  return vector(it->second);
}

std::vector<Match> EmbeddingStore::top_n(std::span<const float> query, std::size_t n) const {
  if (n == 0) throw ContractError("top_n: n must be at least 1");
  if (query.size() != dim_) {
    throw DimensionError("top_n: query has " + std::to_string(query.size()) + " dims, store has " +
                         std::to_string(dim_));
  }
  const double qn = norm_of(query);
  if (!(qn > 0.0)) throw DegenerateInputError("top_n: zero-norm query");

  std::vector<double> scores(size());
  for (std::size_t r = 0; r < size(); ++r) {
    const float* v = values_.data() + r * dim_;
    double dot = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) dot += static_cast<double>(v[i]) * query[i];
    scores[r] = std::clamp(dot / (qn * norms_[r]), -1.0, 1.0);
  }
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t k = std::min(n, size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return ids_[a] < ids_[b];
                    });
  std::vector<Match> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back({ids_[order[i]], scores[order[i]]});
  return out;
}

std::string encode_store(const EmbeddingStore& store) {
  io::ByteWriter w;
  w.bytes("EMBS");
  w.u16(kStoreVersion);
  w.u8(static_cast<std::uint8_t>(store.kind()));
  w.u32(static_cast<std::uint32_t>(store.dim()));
  w.u64(store.size());
  for (std::size_t r = 0; r < store.size(); ++r) {
    w.u16(static_cast<std::uint16_t>(store.id(r).size()));
    w.bytes(store.id(r));
    const auto v = store.vector(r);
    w.f32s(v.data(), v.size());
  }
  return w.buffer();
}

EmbeddingStore decode_store(std::string_view bytes) {
  io::ByteReader r(bytes, "embedding store");
  if (r.bytes(4) != "EMBS") throw FormatError("embedding store: bad magic");
  const std::uint16_t version = r.u16();
  if (version != kStoreVersion) {
    throw FormatError("embedding store: unsupported version " + std::to_string(version));
  }
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw FormatError("embedding store: unknown kind " + std::to_string(kind));
  const std::uint32_t dim = r.u32();
  if (dim == 0) throw FormatError("embedding store: zero dimension");
  const std::uint64_t count = r.u64();
  // Each entry takes at least 2 + 1 + 4*dim bytes; reject absurd counts early.
  if (count > r.remaining() / (3 + 4ULL * dim)) throw FormatError("embedding store: truncated data");
  std::vector<Entry> entries;
  entries.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Entry e;
    const std::uint16_t len = r.u16();
    e.id = std::string(r.bytes(len));
    e.vector.resize(dim);
    r.f32s(e.vector.data(), dim);
    entries.push_back(std::move(e));
  }
  if (!r.done()) throw FormatError("embedding store: trailing bytes");
  try {
    return EmbeddingStore::build(static_cast<StoreKind>(kind), std::move(entries), dim);
  } catch (const BuildError& e) {
    throw FormatError(std::string("embedding store: invalid contents (") + e.what() + ")");
  }
}

void save_store(const std::filesystem::path& path, const EmbeddingStore& store) {
  io::write_file_atomic(path, encode_store(store));
}

EmbeddingStore load_store(const std::filesystem::path& path) {
  return decode_store(io::read_file(path));
}

std::vector<Match> recommend_new_track(std::span<const float> track_ae,
                                       const EmbeddingStore& user_store, std::size_t n) {
  return user_store.top_n(track_ae, n);
}

}  // namespace embrec::serving
