#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace embrec::eval {

struct ScoredPair {
  std::string user_id;
  std::string track_id;
  double score = 0.0;
  int label = 0;  // 1 liked, 0 disliked
};

// Mann-Whitney statistic pooled over every (positive, negative) pair, ties
// counting one half. Throws UndefinedMetricError when a class is missing.
double auc(const std::vector<ScoredPair>& pairs);

// Fraction of pairs scored above `threshold` that are liked.
double precision(const std::vector<ScoredPair>& pairs, double threshold = 0.0);

struct HitRate {
  double value = 0.0;
  std::size_t users = 0;              // users evaluated
  std::vector<std::string> excluded;  // users without held-out positives
};

using Rankings = std::map<std::string, std::vector<std::string>>;
using HeldOut = std::map<std::string, std::set<std::string>>;

// Fraction of users with at least one held-out positive in the first n
// entries of their ranked list.
HitRate hit_rate_at_n(const Rankings& recommendations, const HeldOut& heldout, std::size_t n = 200);

struct Report {
  std::size_t pairs = 0;
  std::size_t positives = 0;
  double auc = 0.0;
  double precision = 0.0;
  bool precision_defined = false;
};

Report evaluate(const std::vector<ScoredPair>& pairs, double threshold = 0.0);

// Text block followed by a key = value block.
std::string format_report(const std::string& split, const Report& report);

// Rows of user_id, track_id, score, label separated by tabs or commas. A
// header line whose score column is not numeric is skipped.
std::vector<ScoredPair> read_scores(const std::string& path);
void write_scores(const std::string& path, const std::vector<ScoredPair>& pairs);

}  // namespace embrec::eval
