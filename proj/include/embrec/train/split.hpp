#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "embrec/data/manifest.hpp"

namespace embrec::train {

enum class SplitMode { per_user, disjoint_users };

SplitMode parse_split_mode(const std::string& name);
std::string split_mode_name(SplitMode mode);

struct SplitSpec {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
  SplitMode mode = SplitMode::per_user;
  std::uint64_t seed = 0;
  // per_user floor on liked and on disliked tracks
  std::size_t min_per_label = 10;
};

struct Splits {
  std::vector<data::Interaction> train;
  std::vector<data::Interaction> val;
  std::vector<data::Interaction> test;
};

// Sizes for a group of n items: round(train*n), round(val*n), remainder.
struct SplitCounts {
  std::size_t train, val, test;
};
SplitCounts split_counts(std::size_t n, const SplitSpec& spec);

// per_user splits every (user, label) stratum; disjoint_users assigns whole
// users. Output rows keep their input order within each split.
Splits split_dataset(const std::vector<data::Interaction>& rows, const SplitSpec& spec);

}  // namespace embrec::train
