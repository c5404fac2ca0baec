#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace embrec::serving {

inline constexpr std::size_t kEmbeddingDim = 40;
inline constexpr std::uint16_t kStoreVersion = 1;

enum class StoreKind : std::uint8_t { user = 0, audio = 1 };

std::string_view kind_name(StoreKind kind);

struct Entry {
  std::string id;
  std::vector<float> vector;
};

struct Match {
  std::string id;
  double score = 0.0;
};

// Immutable id -> vector table with precomputed norms. Safe to query from
// many threads.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;

  // Throws BuildError on a dimension mismatch, zero-norm vector or duplicate id.
  static EmbeddingStore build(StoreKind kind, std::vector<Entry> entries,
                              std::size_t dim = kEmbeddingDim);

  StoreKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  const std::string& id(std::size_t row) const { return ids_[row]; }
  std::span<const float> vector(std::size_t row) const {
    return {values_.data() + row * dim_, dim_};
  }
  bool contains(const std::string& id) const { return index_.count(id) > 0; }
  // Throws VocabularyError for unknown ids.
  std::span<const float> find(const std::string& id) const;

  // Exact cosine ranking: min(n, size) best rows, ties by ascending id.
  std::vector<Match> top_n(std::span<const float> query, std::size_t n) const;

 private:
  StoreKind kind_ = StoreKind::user;
  std::size_t dim_ = kEmbeddingDim;
  std::vector<std::string> ids_;
  std::vector<float> values_;
  std::vector<double> norms_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::string encode_store(const EmbeddingStore& store);
EmbeddingStore decode_store(std::string_view bytes);
void save_store(const std::filesystem::path& path, const EmbeddingStore& store);
EmbeddingStore load_store(const std::filesystem::path& path);

// Cold-start direction: rank users for a new track's audio embedding.
std::vector<Match> recommend_new_track(std::span<const float> track_ae,
                                       const EmbeddingStore& user_store, std::size_t n);

}  // namespace embrec::serving
