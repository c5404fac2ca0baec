#include "embrec/train/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "embrec/errors.hpp"
#include "embrec/rng.hpp"

namespace embrec::train {

SplitMode parse_split_mode(const std::string& name) {
  if (name == "per_user") return SplitMode::per_user;
  if (name == "disjoint_users") return SplitMode::disjoint_users;
  throw ParseError("unknown split mode '" + name + "' (per_user | disjoint_users)");
}

std::string split_mode_name(SplitMode mode) {
  return mode == SplitMode::per_user ? "per_user" : "disjoint_users";
}

SplitCounts split_counts(std::size_t n, const SplitSpec& spec) {
  const auto tr = static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(n)));
  const auto va = static_cast<std::size_t>(std::llround(spec.val * static_cast<double>(n)));
  const std::size_t a = std::min(tr, n);
  const std::size_t b = std::min(va, n - a);
  return {a, b, n - a - b};
}

namespace {

void check_ratios(const SplitSpec& spec) {
  if (spec.train < 0 || spec.val < 0 || spec.test < 0 ||
      std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9) {
    throw ContractError("split ratios must be non-negative and sum to 1");
  }
}

}  // namespace

Splits split_dataset(const std::vector<data::Interaction>& rows, const SplitSpec& spec) {
  check_ratios(spec);
  // 0 train, 1 val, 2 test
  std::vector<int> where(rows.size(), 0);
  Rng rng(spec.seed);

  if (spec.mode == SplitMode::per_user) {
    std::map<std::pair<std::string, int>, std::vector<std::size_t>> strata;
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_user;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      strata[{rows[i].user_id, rows[i].label}].push_back(i);
      auto& c = per_user[rows[i].user_id];
      (rows[i].label == 1 ? c.first : c.second) += 1;
    }
    std::string offenders;
    std::size_t bad = 0;
    for (const auto& [user, c] : per_user) {
      if (c.first < spec.min_per_label || c.second < spec.min_per_label) {
        if (bad < 20) {
          offenders += (bad ? ", " : "") + user + " (" + std::to_string(c.first) + " liked/" +
                       std::to_string(c.second) + " disliked)";
        }
        ++bad;
      }
    }
    if (bad) {
      throw IngestionError(std::to_string(bad) + " user(s) below the " +
                           std::to_string(spec.min_per_label) + "/" +
                           std::to_string(spec.min_per_label) + " floor: " + offenders +
                           (bad > 20 ? ", ..." : ""));
    }
    for (auto& [key, idx] : strata) {
      rng.shuffle(idx);
      const SplitCounts c = split_counts(idx.size(), spec);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        where[idx[k]] = k < c.train ? 0 : (k < c.train + c.val ? 1 : 2);
      }
    }
  } else {
    std::set<std::string> user_set;
    for (const auto& r : rows) user_set.insert(r.user_id);
    std::vector<std::string> users(user_set.begin(), user_set.end());
    rng.shuffle(users);
    const SplitCounts c = split_counts(users.size(), spec);
    std::map<std::string, int> assign;
    for (std::size_t k = 0; k < users.size(); ++k) {
      assign[users[k]] = k < c.train ? 0 : (k < c.train + c.val ? 1 : 2);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) where[i] = assign[rows[i].user_id];
  }

  Splits out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    (where[i] == 0 ? out.train : where[i] == 1 ? out.val : out.test).push_back(rows[i]);
  }
  return out;
}

}  // namespace embrec::train
