#include "embrec/synth/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>

#include "embrec/errors.hpp"
#include "embrec/parallel.hpp"
#include "embrec/rng.hpp"

namespace embrec::synth {
namespace {

constexpr std::size_t kHarmonics = 6;

enum Salt : std::uint64_t { kTaste = 1, kLikes, kDemo, kVoice, kTrack, kOrder };

std::string padded(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

int width_for(std::size_t n) {
  int w = 1;
  while (n >= 10) {
    n /= 10;
    ++w;
  }
  return std::max(w, 3);
}

struct Voice {
  double weights[kHarmonics];
  double am_rate;
  double am_depth;
};

Voice genre_voice(std::uint64_t seed, std::size_t genre) {
  Rng rng(Rng::mix(seed, kVoice, genre));
  Voice v;
  v.weights[0] = 1.0;
  for (std::size_t h = 1; h < kHarmonics; ++h) v.weights[h] = rng.uniform(0.05, 1.0);
  v.am_rate = 0.75 + 1.5 * static_cast<double>(genre) + rng.uniform(0.0, 0.5);
  v.am_depth = rng.uniform(0.3, 0.7);
  return v;
}

// Draws `count` distinct tracks; each draw picks a genre by weight, then a
// track of that genre not yet taken.
std::vector<std::size_t> draw_tracks(Rng& rng, const std::vector<double>& genre_weights,
                                     const std::vector<std::vector<std::size_t>>& by_genre,
                                     std::set<std::size_t>& taken, std::size_t count) {
  std::vector<std::size_t> out;
  std::vector<double> w = genre_weights;
  while (out.size() < count) {
    std::vector<std::size_t> free;
    const std::size_t g = rng.weighted(w);
    for (std::size_t t : by_genre[g]) {
      if (!taken.count(t)) free.push_back(t);
    }
    if (free.empty()) {
      w[g] = 0.0;
      if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) {
        throw ContractError("synthetic corpus: ran out of tracks for a user");
      }
      continue;
    }
    const std::size_t pick = free[rng.below(free.size())];
    taken.insert(pick);
    out.push_back(pick);
  }
  return out;
}

}  // namespace

double genre_base_hz(std::size_t genre) { return 110.0 * std::pow(2.0, genre / 2.0); }

data::Demographics Corpus::demographics() const {
  data::Demographics out;
  for (const User& u : users) out[u.id] = u.demographics;
  return out;
}

Corpus generate(const SyntheticSpec& spec) {
  if (spec.n_genres < 2) throw ContractError("synthetic corpus: need at least two genres");
  if (spec.likes_per_user < 10 || spec.dislikes_per_user < 10) {
    throw ContractError("synthetic corpus: every user needs at least 10 likes and 10 dislikes");
  }
  if (spec.n_tracks < spec.n_genres || spec.likes_per_user + spec.dislikes_per_user > spec.n_tracks) {
    throw ContractError("synthetic corpus: too few tracks");
  }
  if (spec.n_users == 0) throw ContractError("synthetic corpus: need at least one user");

  Corpus c;
  c.spec = spec;
  std::vector<std::vector<std::size_t>> by_genre(spec.n_genres);
  const int tw = width_for(spec.n_tracks);
  for (std::size_t i = 0; i < spec.n_tracks; ++i) {
    Track t;
    t.index = i;
    t.id = padded("t", i, tw);
    t.genre = i % spec.n_genres;
    const std::size_t slot = i / spec.n_genres;
    const std::size_t artist = slot % spec.artists_per_genre;
    const std::size_t album = (slot / spec.artists_per_genre) % spec.albums_per_artist;
    t.artist_id = "ar" + std::to_string(t.genre) + "_" + std::to_string(artist);
    t.album_id = "al" + std::to_string(t.genre) + "_" + std::to_string(artist) + "_" +
                 std::to_string(album);
    by_genre[t.genre].push_back(i);
    c.tracks.push_back(std::move(t));
  }

  const int uw = width_for(spec.n_users);
  for (std::size_t u = 0; u < spec.n_users; ++u) {
    Rng taste_rng(Rng::mix(spec.seed, kTaste, u));
    User user;
    user.id = padded("u", u, uw);
    user.favorite = taste_rng.below(spec.n_genres);
    user.taste.assign(spec.n_genres, 0.0);
    double total = 0.0;
    for (std::size_t g = 0; g < spec.n_genres; ++g) {
      user.taste[g] = (g == user.favorite ? 1.0 : 0.0) + spec.taste_noise * std::abs(taste_rng.normal());
      total += user.taste[g];
    }
    for (double& t : user.taste) t /= total;

    Rng demo_rng(Rng::mix(spec.seed, kDemo, u));
    const std::size_t age =
        demo_rng.uniform() < 0.7 ? user.favorite : demo_rng.below(spec.n_genres);
    user.demographics = {"age:" + std::to_string(age),
                         "region:" + std::to_string(demo_rng.below(8)),
                         "gender:" + std::to_string(demo_rng.below(2))};

    Rng pick(Rng::mix(spec.seed, kLikes, u));
    std::set<std::size_t> taken;
    const auto likes = draw_tracks(pick, user.taste, by_genre, taken, spec.likes_per_user);
    std::vector<double> inverse(spec.n_genres);
    for (std::size_t g = 0; g < spec.n_genres; ++g) inverse[g] = 1.0 / (user.taste[g] + 1e-2);
    const auto dislikes = draw_tracks(pick, inverse, by_genre, taken, spec.dislikes_per_user);

    std::vector<std::pair<std::size_t, int>> events;
    for (std::size_t t : likes) events.emplace_back(t, 1);
    for (std::size_t t : dislikes) events.emplace_back(t, 0);
    Rng order(Rng::mix(spec.seed, kOrder, u));
    order.shuffle(events);
    for (std::size_t k = 0; k < events.size(); ++k) {
      const Track& t = c.tracks[events[k].first];
      c.interactions.push_back({user.id, t.id, t.album_id, t.artist_id, events[k].second,
                                static_cast<std::int64_t>(u * 100000 + k)});
    }
    c.users.push_back(std::move(user));
  }
  return c;
}

audio::AudioClip render_track(const SyntheticSpec& spec, const Track& track) {
  const Voice v = genre_voice(spec.seed, track.genre);
  Rng rng(Rng::mix(spec.seed, kTrack, track.index));
  const double rate = audio::kSampleRate;
  const double f0 = genre_base_hz(track.genre) * (1.0 + rng.uniform(-0.01, 0.01));
  const double amp = rng.uniform(0.25, 0.4);
  const auto n = static_cast<std::size_t>(spec.track_seconds * rate);

  // Oscillators advanced by complex rotation; one per harmonic plus the AM.
  double cr[kHarmonics + 1], sr[kHarmonics + 1], c[kHarmonics + 1], s[kHarmonics + 1];
  double gain[kHarmonics] = {};
  double norm = 0.0;
  for (std::size_t h = 0; h < kHarmonics; ++h) {
    const double f = f0 * static_cast<double>(h + 1);
    if (f < 0.45 * rate) gain[h] = v.weights[h];
    norm += gain[h];
    const double step = 2.0 * std::numbers::pi * f / rate;
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    cr[h] = std::cos(step);
    sr[h] = std::sin(step);
    c[h] = std::cos(phase);
    s[h] = std::sin(phase);
  }
  {
    const double step = 2.0 * std::numbers::pi * v.am_rate / rate;
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    cr[kHarmonics] = std::cos(step);
    sr[kHarmonics] = std::sin(step);
    c[kHarmonics] = std::cos(phase);
    s[kHarmonics] = std::sin(phase);
  }

  audio::AudioClip clip;
  clip.samples.resize(n);
  const double noise = spec.noise_level * std::sqrt(3.0);
  for (std::size_t i = 0; i < n; ++i) {
    double tone = 0.0;
    for (std::size_t h = 0; h <= kHarmonics; ++h) {
      if (h < kHarmonics) tone += gain[h] * s[h];
      const double nc = c[h] * cr[h] - s[h] * sr[h];
      const double ns = s[h] * cr[h] + c[h] * sr[h];
      c[h] = nc;
      s[h] = ns;
    }
    const double envelope = 1.0 - v.am_depth * 0.5 * (1.0 + s[kHarmonics]);
    const double x = amp * envelope * tone / norm + noise * rng.uniform(-1.0, 1.0);
    clip.samples[i] = static_cast<float>(std::clamp(x, -1.0, 1.0));
    if (i % 4096 == 4095) {
      // renormalize the rotators against drift
      for (std::size_t h = 0; h <= kHarmonics; ++h) {
        const double r = std::hypot(c[h], s[h]);
        c[h] /= r;
        s[h] /= r;
      }
    }
  }
  return clip;
}

void write_corpus(const std::filesystem::path& dir, const Corpus& corpus, bool with_audio) {
  std::filesystem::create_directories(dir);
  data::write_interactions(dir / "interactions.tsv", corpus.interactions);
  data::write_demographics(dir / "demographics.tsv", corpus.demographics());
  {
    std::ofstream out(dir / "genres.tsv");
    if (!out) throw IngestionError("cannot write " + (dir / "genres.tsv").string());
    out << "track_id\tgenre\n";
    for (const Track& t : corpus.tracks) out << t.id << '\t' << t.genre << '\n';
  }
  {
    std::ofstream out(dir / "tastes.tsv");
    if (!out) throw IngestionError("cannot write " + (dir / "tastes.tsv").string());
    out << "user_id\tfavorite";
    for (std::size_t g = 0; g < corpus.spec.n_genres; ++g) out << "\tgenre" << g;
    out << '\n';
    for (const User& u : corpus.users) {
      out << u.id << '\t' << u.favorite;
      for (double t : u.taste) out << '\t' << t;
      out << '\n';
    }
  }
  if (with_audio) {
    std::filesystem::create_directories(dir / "audio");
    parallel_for(corpus.tracks.size(), [&](std::size_t i) {
      const Track& t = corpus.tracks[i];
      audio::write_wav(dir / "audio" / (t.id + ".wav"), render_track(corpus.spec, t));
    });
  }
}

}  // namespace embrec::synth
