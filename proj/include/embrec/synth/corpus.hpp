#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "embrec/audio/wav.hpp"
#include "embrec/data/manifest.hpp"

namespace embrec::synth {

struct SyntheticSpec {
  std::size_t n_users = 200;
  std::size_t n_tracks = 1000;
  std::size_t n_genres = 4;
  std::uint64_t seed = 42;
  double taste_noise = 0.1;
  std::size_t likes_per_user = 20;
  std::size_t dislikes_per_user = 20;
  double track_seconds = 30.0;
  std::size_t artists_per_genre = 5;
  std::size_t albums_per_artist = 2;
  double noise_level = 0.02;
};

struct Track {
  std::size_t index = 0;
  std::string id;
  std::size_t genre = 0;
  std::string artist_id;
  std::string album_id;
};

struct User {
  std::string id;
  std::size_t favorite = 0;
  std::vector<double> taste;  // sums to 1
  std::vector<std::string> demographics;
};

struct Corpus {
  SyntheticSpec spec;
  std::vector<Track> tracks;
  std::vector<User> users;
  std::vector<data::Interaction> interactions;

  data::Demographics demographics() const;
};

// Throws ContractError for fewer than two genres, likes or dislikes below 10,
// or more likes + dislikes than tracks.
Corpus generate(const SyntheticSpec& spec);

// Harmonic tone of the track's genre plus modulation and noise, 22050 Hz.
audio::AudioClip render_track(const SyntheticSpec& spec, const Track& track);

// Base frequency of a genre: 110 * 2^(g/2) Hz.
double genre_base_hz(std::size_t genre);

// Writes interactions.tsv, demographics.tsv, genres.tsv, tastes.tsv and,
// when requested, audio/<track_id>.wav.
void write_corpus(const std::filesystem::path& dir, const Corpus& corpus, bool with_audio);

}  // namespace embrec::synth
