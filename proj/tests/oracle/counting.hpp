#pragma once

// Brute-force reference implementations of the ranking metrics and retrieval.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "embrec/eval/metrics.hpp"
#include "embrec/rng.hpp"
#include "embrec/serving/store.hpp"

namespace oracle {

// Direct O(P*N) pair count.
double auc_by_pairs(const std::vector<embrec::eval::ScoredPair>& pairs);
double precision_by_count(const std::vector<embrec::eval::ScoredPair>& pairs, double threshold);

// Full sort of every stored vector by double-precision cosine.
std::vector<std::pair<std::string, double>> full_scan(const embrec::serving::EmbeddingStore& store,
                                                      const std::vector<float>& query);

// Random labelled scores drawn from a small grid so ties are frequent.
std::vector<embrec::eval::ScoredPair> random_pairs(embrec::Rng& rng);

// Probability that a uniformly random top-n list out of `items` contains the
// single held-out positive: 1 - C(items-1, n) / C(items, n).
double hypergeometric_hit(std::size_t items, std::size_t n);

}  // namespace oracle
