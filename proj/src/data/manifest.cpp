#include "embrec/data/manifest.hpp"

#include <fstream>

#include "embrec/errors.hpp"
#include "embrec/text.hpp"

namespace embrec::data {

std::vector<Interaction> read_interactions(const std::filesystem::path& path) {
  std::vector<Interaction> out;
  bool first = true;
  for (const std::string& line : text::read_lines(path)) {
    const auto f = text::split_fields(line);
    const bool header = first;
    first = false;
    if (f.size() != 6) {
      throw ParseError(path.string() + ": expected 6 fields, got " + std::to_string(f.size()) +
                       " in '" + line + "'");
    }
    const auto label = text::parse_int(f[4]);
    const auto ts = text::parse_int(f[5]);
    if (!label || !ts) {
      if (header) continue;
      throw ParseError(path.string() + ": bad label or timestamp in '" + line + "'");
    }
    if (*label != 0 && *label != 1) throw ParseError(path.string() + ": label must be 0 or 1");
    out.push_back({f[0], f[1], f[2], f[3], static_cast<int>(*label), *ts});
  }
  return out;
}

void write_interactions(const std::filesystem::path& path, const std::vector<Interaction>& rows) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << "user_id\ttrack_id\talbum_id\tartist_id\tlabel\ttimestamp\n";
  for (const Interaction& r : rows) {
    out << r.user_id << '\t' << r.track_id << '\t' << r.album_id << '\t' << r.artist_id << '\t'
        << r.label << '\t' << r.timestamp << '\n';
  }
}

Demographics read_demographics(const std::filesystem::path& path) {
  Demographics out;
  for (const std::string& line : text::read_lines(path)) {
    const auto f = text::split_fields(line);
    if (f[0] == "user_id") continue;
    auto& feats = out[f[0]];
    for (std::size_t i = 1; i < f.size(); ++i) {
      std::size_t start = 0;
      const std::string& field = f[i];
      while (start <= field.size()) {
        const auto bar = field.find('|', start);
        const auto piece = text::trim(std::string_view(field).substr(
            start, bar == std::string::npos ? std::string::npos : bar - start));
        if (!piece.empty()) feats.emplace_back(piece);
        if (bar == std::string::npos) break;
        start = bar + 1;
      }
    }
  }
  return out;
}

void write_demographics(const std::filesystem::path& path, const Demographics& demo) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << "user_id\tfeatures\n";
  for (const auto& [user, feats] : demo) {
    out << user << '\t';
    for (std::size_t i = 0; i < feats.size(); ++i) out << (i ? "|" : "") << feats[i];
    out << '\n';
  }
}

std::map<std::string, std::string> read_track_labels(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  for (const std::string& line : text::read_lines(path)) {
    const auto f = text::split_fields(line);
    if (f.size() < 2) throw ParseError(path.string() + ": expected track_id, label in '" + line + "'");
    if (f[0] == "track_id") continue;
    out[f[0]] = f[1];
  }
  return out;
}

}  // namespace embrec::data
