#include "counting.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

using embrec::eval::ScoredPair;

double auc_by_pairs(const std::vector<ScoredPair>& pairs) {
  std::uint64_t twice = 0, total = 0;
  for (const ScoredPair& p : pairs) {
    if (p.label != 1) continue;
    for (const ScoredPair& q : pairs) {
      if (q.label != 0) continue;
      ++total;
      if (p.score > q.score) twice += 2;
      else if (p.score == q.score) twice += 1;
    }
  }
  std::uint64_t pos = 0;
  for (const ScoredPair& p : pairs) pos += p.label == 1;
  const std::uint64_t neg = pairs.size() - pos;
  return static_cast<double>(twice) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

double precision_by_count(const std::vector<ScoredPair>& pairs, double threshold) {
  std::size_t above = 0, liked = 0;
  for (const ScoredPair& p : pairs) {
    if (!(p.score > threshold)) continue;
    ++above;
    liked += p.label == 1;
  }
  return static_cast<double>(liked) / static_cast<double>(above);
}

std::vector<std::pair<std::string, double>> full_scan(const embrec::serving::EmbeddingStore& store,
                                                      const std::vector<float>& query) {
  std::vector<std::pair<std::string, double>> all;
  double qq = 0.0;
  for (float q : query) qq += double(q) * q;
  for (std::size_t r = 0; r < store.size(); ++r) {
    const auto v = store.vector(r);
    double dot = 0.0, vv = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      dot += double(v[i]) * query[i];
      vv += double(v[i]) * v[i];
    }
    all.emplace_back(store.id(r), dot / (std::sqrt(qq) * std::sqrt(vv)));
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return all;
}

std::vector<ScoredPair> random_pairs(embrec::Rng& rng) {
  const std::size_t n = 2 + rng.below(60);
  std::vector<ScoredPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    ScoredPair p;
    p.user_id = "u" + std::to_string(rng.below(5));
    p.track_id = "t" + std::to_string(i);
    p.score = static_cast<double>(rng.between(-10, 10)) / 10.0;
    p.label = static_cast<int>(rng.below(2));
    out.push_back(p);
  }
  out[0].label = 1;
  out[1].label = 0;
  return out;
}

double hypergeometric_hit(std::size_t items, std::size_t n) {
  // C(items-1, n) / C(items, n) = (items - n) / items
  double miss = 1.0;
  for (std::size_t i = 0; i < n; ++i) miss *= double(items - 1 - i) / double(items - i);
  return 1.0 - miss;
}

}  // namespace oracle
