#include "embrec/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "embrec/errors.hpp"
#include "embrec/log.hpp"
#include "embrec/text.hpp"

namespace embrec::eval {

double auc(const std::vector<ScoredPair>& pairs) {
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return pairs[a].score < pairs[b].score; });
  // Twice the Mann-Whitney U so ties stay integral.
  std::uint64_t twice_u = 0, positives = 0, negatives_below = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::uint64_t pos = 0, neg = 0;
    while (j < order.size() && pairs[order[j]].score == pairs[order[i]].score) {
      if (!std::isfinite(pairs[order[j]].score)) throw ContractError("auc: non-finite score");
      (pairs[order[j]].label == 1 ? pos : neg) += 1;
      ++j;
    }
    twice_u += 2 * pos * negatives_below + pos * neg;
    positives += pos;
    negatives_below += neg;
    i = j;
  }
  if (positives == 0 || negatives_below == 0) {
    throw UndefinedMetricError("auc needs at least one liked and one disliked pair");
  }
  return static_cast<double>(twice_u) /
         (2.0 * static_cast<double>(positives) * static_cast<double>(negatives_below));
}

double precision(const std::vector<ScoredPair>& pairs, double threshold) {
  std::size_t predicted = 0, correct = 0;
  for (const ScoredPair& p : pairs) {
    if (p.score > threshold) {
      ++predicted;
      if (p.label == 1) ++correct;
    }
  }
  if (predicted == 0) {
    throw UndefinedMetricError("precision: no pair scores above the threshold");
  }
  return static_cast<double>(correct) / static_cast<double>(predicted);
}

HitRate hit_rate_at_n(const Rankings& recommendations, const HeldOut& heldout, std::size_t n) {
  if (n == 0) throw ContractError("hit_rate_at_n: n must be positive");
  HitRate out;
  std::size_t hits = 0;
  for (const auto& [user, ranked] : recommendations) {
    const auto it = heldout.find(user);
    if (it == heldout.end() || it->second.empty()) {
      out.excluded.push_back(user);
      continue;
    }
    ++out.users;
    const std::size_t depth = std::min(n, ranked.size());
    for (std::size_t k = 0; k < depth; ++k) {
      if (it->second.count(ranked[k])) {
        ++hits;
        break;
      }
    }
  }
  if (!out.excluded.empty()) {
    log::warn("hit_rate_at_n: excluded " + std::to_string(out.excluded.size()) +
              " user(s) without held-out positives");
  }
  if (out.users == 0) throw UndefinedMetricError("hit_rate_at_n: no user has held-out positives");
  out.value = static_cast<double>(hits) / static_cast<double>(out.users);
  return out;
}

Report evaluate(const std::vector<ScoredPair>& pairs, double threshold) {
  Report r;
  r.pairs = pairs.size();
  for (const ScoredPair& p : pairs) r.positives += p.label == 1;
  r.auc = auc(pairs);
  try {
    r.precision = precision(pairs, threshold);
    r.precision_defined = true;
  } catch (const UndefinedMetricError&) {
    r.precision_defined = false;
  }
  return r;
}

namespace {

// 6 significant digits, always with a decimal point ("1.0", not "1")
std::string decimal(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  std::string s = os.str();
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

std::string format_report(const std::string& split, const Report& report) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << split << ": " << report.pairs << " pairs (" << report.positives << " liked)  AUC "
     << report.auc << "  precision ";
  if (report.precision_defined) {
    os << report.precision;
  } else {
    os << "undefined";
  }
  os << "\n";
  os << "[" << split << "]\n";
  os << "pairs = " << report.pairs << "\n";
  os << "positives = " << report.positives << "\n";
  os << "auc = " << decimal(report.auc) << "\n";
  if (report.precision_defined) os << "precision = " << decimal(report.precision) << "\n";
  return os.str();
}

std::vector<ScoredPair> read_scores(const std::string& path) {
  std::vector<ScoredPair> out;
  bool first = true;
  for (const std::string& line : text::read_lines(path)) {
    const auto f = text::split_fields(line);
    const bool is_first = first;
    first = false;
    if (f.size() < 4) throw ParseError(path + ": expected user, track, score, label in '" + line + "'");
    const auto score = text::parse_double(f[2]);
    const auto label = text::parse_int(f[3]);
    if (!score || !label) {
      if (is_first) continue;  // header
      throw ParseError(path + ": bad score or label in '" + line + "'");
    }
    if (*label != 0 && *label != 1) throw ParseError(path + ": label must be 0 or 1");
    out.push_back({f[0], f[1], *score, static_cast<int>(*label)});
  }
  return out;
}

void write_scores(const std::string& path, const std::vector<ScoredPair>& pairs) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path);
  out << "user_id\ttrack_id\tscore\tlabel\n" << std::setprecision(9);
  for (const ScoredPair& p : pairs) {
    out << p.user_id << '\t' << p.track_id << '\t' << p.score << '\t' << p.label << '\n';
  }
}

}  // namespace embrec::eval
