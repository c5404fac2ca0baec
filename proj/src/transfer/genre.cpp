#include "embrec/transfer/genre.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "embrec/binary_io.hpp"
#include "embrec/errors.hpp"
#include "embrec/rng.hpp"
#include "embrec/text.hpp"

namespace embrec::transfer {

namespace {

std::string normalise_split(const std::string& tag) {
  std::string t;
  for (char c : tag) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "train" || t == "training") return "train";
  if (t == "val" || t == "valid" || t == "validation") return "val";
  if (t == "test" || t == "testing") return "test";
  return {};
}

std::string where(const std::filesystem::path& p, std::size_t line) {
  return p.string() + ":" + std::to_string(line);
}

}  // namespace

std::vector<GenreEntry> read_genre_manifest(const std::filesystem::path& path) {
  const auto lines = text::read_lines(path);
  std::vector<GenreEntry> rows;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto f = text::split_fields(lines[i]);
    if (f.size() != 3) {
      throw ParseError(where(path, i + 1) + ": expected track_id, genre, split");
    }
    const std::string split = normalise_split(f[2]);
    if (split.empty()) {
      if (rows.empty() && f[0] == "track_id") continue;  // header
      throw ParseError(where(path, i + 1) + ": unknown split tag '" + f[2] + "'");
    }
    if (!seen.insert(f[0]).second) {
      throw ParseError(where(path, i + 1) + ": duplicate track " + f[0]);
    }
    rows.push_back({f[0], f[1], split});
  }
  return rows;
}

void write_genre_manifest(const std::filesystem::path& path, const std::vector<GenreEntry>& rows) {
  std::string out = "track_id\tgenre\tsplit\n";
  for (const auto& r : rows) out += r.track_id + '\t' + r.genre + '\t' + r.split + '\n';
  io::write_file_atomic(path, out);
}

std::map<std::string, std::size_t> split_counts(const std::vector<GenreEntry>& rows) {
  std::map<std::string, std::size_t> c;
  for (const auto& r : rows) ++c[r.split];
  return c;
}

std::vector<GenreEntry> stratified_split(
    const std::vector<std::pair<std::string, std::string>>& track_genre, double train_fraction,
    std::uint64_t seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    throw ContractError("stratified_split: fraction must be in [0, 1]");
  }
  std::map<std::string, std::vector<std::string>> by_genre;
  for (const auto& [track, genre] : track_genre) by_genre[genre].push_back(track);
  std::vector<GenreEntry> out;
  std::uint64_t k = 0;
  for (auto& [genre, tracks] : by_genre) {
    std::sort(tracks.begin(), tracks.end());
    Rng rng(Rng::mix(seed, k++));
    rng.shuffle(tracks);
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * double(tracks.size())));
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      out.push_back({tracks[i], genre, i < n_train ? "train" : "test"});
    }
  }
  return out;
}

FeatureTable read_feature_file(const std::filesystem::path& path) {
  const auto lines = text::read_lines(path);
  FeatureTable table;
  std::size_t dim = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    std::replace(line.begin(), line.end(), ',', ' ');
    const auto f = text::split_whitespace(line);
    if (f.size() < 2) throw ParseError(where(path, i + 1) + ": expected a track id and features");
    std::vector<double> v;
    v.reserve(f.size() - 1);
    for (std::size_t j = 1; j < f.size(); ++j) {
      const auto x = text::parse_double(f[j]);
      if (!x || !std::isfinite(*x)) {
        throw ParseError(where(path, i + 1) + ": bad feature value '" + f[j] + "'");
      }
      v.push_back(*x);
    }
    if (dim == 0) dim = v.size();
    if (v.size() != dim) {
      throw ParseError(where(path, i + 1) + ": expected " + std::to_string(dim) + " features, got " +
                       std::to_string(v.size()));
    }
    if (!table.emplace(f[0], std::move(v)).second) {
      throw ParseError(where(path, i + 1) + ": duplicate track " + f[0]);
    }
  }
  return table;
}

void write_feature_file(const std::filesystem::path& path, const FeatureTable& table) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (const auto& [id, v] : table) {
    os << id;
    for (double x : v) os << '\t' << x;
    os << '\n';
  }
  io::write_file_atomic(path, os.str());
}

GenreReport genre_pipeline(const std::vector<GenreEntry>& manifest, const FeatureTable& baseline,
                           const serving::EmbeddingStore* ae, const GenreOptions& options) {
  std::vector<std::string> missing;
  for (const auto& e : manifest) {
    if (e.split == "val") continue;
    if (!baseline.count(e.track_id)) missing.push_back("baseline:" + e.track_id);
    if (ae && !ae->contains(e.track_id)) missing.push_back("ae:" + e.track_id);
  }
  if (!missing.empty()) {
    std::string msg = "genre pipeline: " + std::to_string(missing.size()) + " missing feature(s):";
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i) msg += " " + missing[i];
    throw IngestionError(msg);
  }

  std::vector<std::string> genres;
  for (const auto& e : manifest) genres.push_back(e.genre);
  std::sort(genres.begin(), genres.end());
  genres.erase(std::unique(genres.begin(), genres.end()), genres.end());
  auto genre_id = [&](const std::string& g) {
    return static_cast<int>(std::lower_bound(genres.begin(), genres.end(), g) - genres.begin());
  };

  std::vector<const GenreEntry*> train, test;
  for (const auto& e : manifest) {
    if (e.split == "train") train.push_back(&e);
    else if (e.split == "test") test.push_back(&e);
  }
  if (train.empty() || test.empty()) throw ContractError("genre pipeline: empty train or test split");

  GenreReport report;
  report.train_count = train.size();
  report.test_count = test.size();

  auto run = [&](const std::string& name, bool with_ae) {
    auto feature = [&](const GenreEntry& e) {
      std::vector<double> v = baseline.at(e.track_id);
      if (with_ae) {
        const auto a = ae->find(e.track_id);
        v.insert(v.end(), a.begin(), a.end());
      }
      return v;
    };
    Matrix xtr, xte;
    std::vector<int> ytr;
    for (const auto* e : train) xtr.push_back(feature(*e)), ytr.push_back(genre_id(e->genre));
    for (const auto* e : test) xte.push_back(feature(*e));

    const Standardizer s = Standardizer::fit(xtr);
    const PcaProjection pca = pca_fit(s.apply(xtr), options.pca_dim);
    const SvmModel svm = svm_fit(pca.apply(s.apply(xtr)), ytr, options.svm);

    ConditionReport c;
    c.name = name;
    c.feature_dim = xtr.front().size();
    for (const auto& g : genres) c.per_class.push_back({g, 0, 0});
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      const int truth = genre_id(test[i]->genre);
      const bool ok = svm_predict(svm, pca.apply(s.apply(xte[i]))) == truth;
      correct += ok;
      c.per_class[std::size_t(truth)].correct += ok;
      ++c.per_class[std::size_t(truth)].total;
    }
    c.accuracy = double(correct) / double(test.size());
    report.conditions.push_back(std::move(c));
  };
  run("baseline", false);
  if (ae) run("baseline+ae", true);
  return report;
}

std::string format_genre_report(const GenreReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "train " << report.train_count << " test " << report.test_count << '\n';
  for (const auto& c : report.conditions) {
    os << c.name << "\tdim " << c.feature_dim << "\taccuracy " << c.accuracy << '\n';
    for (const auto& k : c.per_class) {
      os << "  " << k.genre << '\t' << k.correct << '/' << k.total;
      if (k.total > 0) os << '\t' << double(k.correct) / double(k.total);
      os << '\n';
    }
  }
  return os.str();
}

SyntheticGenreSet make_synthetic_genre_set(const SyntheticGenreSpec& spec) {
  if (spec.n_classes < 2 || spec.per_class == 0) throw ContractError("synthetic genres: need >= 2 classes");
  Rng rng(Rng::mix(spec.seed, 0x6E7E));
  auto centroid = [&](std::size_t dim, double scale) {
    std::vector<double> c(dim);
    for (double& v : c) v = scale * rng.normal();
    return c;
  };
  std::vector<std::vector<double>> base_c, ae_c;
  for (std::size_t k = 0; k < spec.n_classes; ++k) {
    base_c.push_back(centroid(spec.baseline_dim, spec.baseline_separation));
    ae_c.push_back(centroid(spec.ae_dim, spec.ae_separation));
  }
  SyntheticGenreSet out;
  std::vector<std::pair<std::string, std::string>> labels;
  std::vector<serving::Entry> ae_rows;
  for (std::size_t k = 0; k < spec.n_classes; ++k) {
    const std::string genre = "g" + std::to_string(k);
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      const std::string id = "t" + std::to_string(k * spec.per_class + i);
      std::vector<double> b = base_c[k];
      for (double& v : b) v += rng.normal();
      std::vector<float> a(spec.ae_dim);
      for (std::size_t j = 0; j < spec.ae_dim; ++j) a[j] = static_cast<float>(ae_c[k][j] + rng.normal());
      out.baseline.emplace(id, std::move(b));
      ae_rows.push_back({id, std::move(a)});
      labels.emplace_back(id, genre);
    }
  }
  out.manifest = stratified_split(labels, 0.7, spec.seed);
  out.ae = serving::EmbeddingStore::build(serving::StoreKind::audio, std::move(ae_rows), spec.ae_dim);
  return out;
}

}  // namespace embrec::transfer
