#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace embrec::data {

struct Interaction {
  std::string user_id;
  std::string track_id;
  std::string album_id;
  std::string artist_id;
  int label = 1;  // 1 liked, 0 disliked
  std::int64_t timestamp = 0;
};

// user_id -> categorical feature ids
using Demographics = std::map<std::string, std::vector<std::string>>;

// Rows of user_id, track_id, album_id, artist_id, label, timestamp separated by
// tabs or commas. An optional header row is skipped.
std::vector<Interaction> read_interactions(const std::filesystem::path& path);
void write_interactions(const std::filesystem::path& path, const std::vector<Interaction>& rows);

// Rows of user_id followed by feature ids, either as further fields or as a
// single '|'-separated field.
Demographics read_demographics(const std::filesystem::path& path);
void write_demographics(const std::filesystem::path& path, const Demographics& demo);

// Rows of track_id, label.
std::map<std::string, std::string> read_track_labels(const std::filesystem::path& path);

}  // namespace embrec::data
