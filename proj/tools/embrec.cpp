// embrec: command-line front end for the whole pipeline.
// Exit codes: 0 success, 1 usage error, 2 data or contract error.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "embrec/audio/spectrogram.hpp"
#include "embrec/audio/wav.hpp"
#include "embrec/binary_io.hpp"
#include "embrec/data/manifest.hpp"
#include "embrec/errors.hpp"
#include "embrec/eval/metrics.hpp"
#include "embrec/log.hpp"
#include "embrec/model/audio_cnn.hpp"
#include "embrec/nd/parameters.hpp"
#include "embrec/parallel.hpp"
#include "embrec/serving/store.hpp"
#include "embrec/synth/corpus.hpp"
#include "embrec/text.hpp"
#include "embrec/train/config.hpp"
#include "embrec/train/harness.hpp"
#include "embrec/train/split.hpp"
#include "embrec/transfer/genre.hpp"
#include "embrec/user/user_branch.hpp"

namespace fs = std::filesystem;
using namespace embrec;

namespace {

struct Globals {
  std::size_t workers = 0;
  std::uint64_t seed = 42;
  bool seed_set = false;
  bool verbose = false;
  bool quiet = false;
};

// Paths inside a train-audio output directory.
fs::path checkpoint_path(const fs::path& dir) { return dir / "audio.ckpt"; }
fs::path experiment_path(const fs::path& dir) { return dir / "experiment.conf"; }
fs::path anchor_users_path(const fs::path& dir) { return dir / "anchor_users.txt"; }

train::Splits make_splits(const std::vector<data::Interaction>& rows, train::SplitMode mode,
                          std::uint64_t seed) {
  train::SplitSpec spec;
  spec.mode = mode;
  spec.seed = seed;
  return train::split_dataset(rows, spec);
}

data::Demographics maybe_demographics(const std::string& path) {
  return path.empty() ? data::Demographics{} : data::read_demographics(path);
}

std::vector<std::string> read_id_list(const fs::path& path) { return text::read_lines(path); }

void write_id_list(const fs::path& path, const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += id + '\n';
  io::write_file_atomic(path, out);
}

// Anchors for a trained (or about-to-be-trained) audio model.
model::AnchorTable anchors_for(const train::ExperimentConfig& config, const std::string& ue_path,
                               const std::vector<std::string>& users) {
  if (config.variant.uses_lookup_anchor()) return model::AnchorTable::lookup(users);
  if (ue_path.empty()) throw ContractError(config.variant.label() + " needs --ue");
  return model::AnchorTable::frozen(serving::load_store(ue_path));
}

std::vector<std::string> users_of(const std::vector<data::Interaction>& rows) {
  std::set<std::string> ids;
  for (const auto& r : rows) ids.insert(r.user_id);
  return {ids.begin(), ids.end()};
}

void print_matches(const std::vector<serving::Match>& matches) {
  std::cout << std::setprecision(6) << std::fixed;
  for (const auto& m : matches) std::cout << m.id << '\t' << m.score << '\n';
}

// ---- gen-synthetic

struct GenOpts {
  std::string out;
  synth::SyntheticSpec spec;
  bool no_audio = false;
};

int gen_synthetic(const GenOpts& o, const Globals& g) {
  synth::SyntheticSpec spec = o.spec;
  spec.seed = g.seed;
  const synth::Corpus corpus = synth::generate(spec);
  synth::write_corpus(o.out, corpus, !o.no_audio);
  std::cout << "users " << corpus.users.size() << " tracks " << corpus.tracks.size()
            << " interactions " << corpus.interactions.size() << '\n';
  return 0;
}

// ---- extract-features

struct ExtractOpts {
  std::string audio_dir;
  std::string out;
};

int extract_features(const ExtractOpts& o) {
  std::vector<fs::path> wavs;
  for (const auto& e : fs::directory_iterator(o.audio_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") wavs.push_back(e.path());
  }
  if (wavs.empty()) throw IngestionError("no .wav files in " + o.audio_dir);
  std::sort(wavs.begin(), wavs.end());
  fs::create_directories(o.out);
  parallel_for(wavs.size(), [&](std::size_t i) {
    const auto spec = audio::log_mel(audio::read_wav(wavs[i]));
    audio::save_log_mel(fs::path(o.out) / (wavs[i].stem().string() + ".lmel"), spec);
  });
  std::cout << "extracted " << wavs.size() << " tracks\n";
  return 0;
}

// ---- train-user

struct TrainUserOpts {
  std::string interactions;
  std::string demographics;
  std::string out;
  std::string split_mode = "per_user";
  user::UserBranchConfig config;
};

int train_user(const TrainUserOpts& o, const Globals& g) {
  const auto rows = data::read_interactions(o.interactions);
  const auto demo = maybe_demographics(o.demographics);
  const auto splits = make_splits(rows, train::parse_split_mode(o.split_mode), g.seed);
  const auto vocab = user::build_vocab(rows, demo);
  user::UserBranchConfig config = o.config;
  config.seed = g.seed;
  const auto examples = user::prefix_examples(vocab, splits.train, demo);
  const auto val = user::heldout_examples(vocab, splits.train, splits.val, demo);
  const auto result = user::train_user_branch(vocab, examples, val, config);
  fs::create_directories(o.out);
  nd::save_checkpoint(fs::path(o.out) / "user.ckpt", result.params);
  user::save_vocab(fs::path(o.out) / "vocab.tsv", vocab);
  std::ostringstream log;
  log << "epoch\ttrain_loss\tval_loss\n" << std::setprecision(10);
  for (std::size_t e = 0; e < result.train_loss.size(); ++e) {
    log << e + 1 << '\t' << result.train_loss[e] << '\t';
    if (e < result.val_loss.size()) log << result.val_loss[e];
    log << '\n';
  }
  io::write_file_atomic(fs::path(o.out) / "user_loss.tsv", log.str());
  std::cout << log.str();
  return 0;
}

// ---- export-ue

struct ExportUeOpts {
  std::string model;
  std::string interactions;
  std::string demographics;
  std::string out;
  std::string split_mode = "per_user";
};

int export_ue(const ExportUeOpts& o, const Globals& g) {
  const auto params = nd::load_checkpoint(fs::path(o.model) / "user.ckpt");
  const auto vocab = user::load_vocab(fs::path(o.model) / "vocab.tsv");
  const auto rows = data::read_interactions(o.interactions);
  const auto demo = maybe_demographics(o.demographics);
  // histories come from training likes only; users with none there get a
  // demographics-only embedding
  const auto splits = make_splits(rows, train::parse_split_mode(o.split_mode), g.seed);
  auto hist = user::user_histories(vocab, splits.train, demo);
  for (const auto& u : users_of(rows)) {
    if (hist.count(u)) continue;
    const auto it = demo.find(u);
    hist[u] = user::history_from(vocab, {}, it == demo.end() ? std::vector<std::string>{} : it->second);
  }
  const auto store = user::export_user_embeddings(params, hist);
  serving::save_store(o.out, store);
  std::cout << "exported " << store.size() << " user embeddings\n";
  return 0;
}

// ---- train-audio

struct TrainAudioOpts {
  std::string config_path;
  std::string interactions;
  std::string features;
  std::string ue;
  std::string out;
  std::string variant;
  std::size_t negatives = 0;
  double margin = 0.0;
  double context = 0.0;
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  std::size_t patience = 0;
  double lr0 = 0.0;
  std::string split_mode;
  std::vector<std::size_t> channels;
};

int train_audio(const TrainAudioOpts& o, const Globals& g, const CLI::App& cmd) {
  train::ExperimentConfig c =
      o.config_path.empty() ? train::ExperimentConfig{} : train::load_experiment_config(o.config_path);
  // flags win over the config file
  if (cmd.count("--variant")) c.variant.kind = model::parse_variant_kind(o.variant);
  if (cmd.count("--negatives")) c.variant.n_negatives = o.negatives;
  if (cmd.count("--margin")) c.variant.margin = static_cast<float>(o.margin);
  if (cmd.count("--context")) c.variant.context_duration = o.context;
  if (cmd.count("--epochs")) c.epochs = o.epochs;
  if (cmd.count("--batch-size")) c.batch_size = o.batch_size;
  if (cmd.count("--patience")) c.patience = o.patience;
  if (cmd.count("--lr0")) c.optimizer.lr0 = o.lr0;
  if (cmd.count("--split-mode")) c.split_mode = train::parse_split_mode(o.split_mode);
  if (cmd.count("--channels")) c.cnn.channels = o.channels;
  if (g.seed_set || o.config_path.empty()) c.seed = g.seed;
  c.validate();

  const auto rows = data::read_interactions(o.interactions);
  const auto splits = make_splits(rows, c.split_mode, c.seed);
  std::vector<std::string> needed = train::referenced_tracks(splits.train);
  for (const auto& id : train::referenced_tracks(splits.val)) needed.push_back(id);
  std::sort(needed.begin(), needed.end());
  needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
  const auto audio = train::load_audio_cache(o.features, needed);
  const auto users = users_of(rows);
  const auto anchors = anchors_for(c, o.ue, users);

  const auto run = train::run_training(c, splits, audio, anchors);
  fs::create_directories(o.out);
  nd::save_checkpoint(checkpoint_path(o.out), run.params);
  io::write_file_atomic(experiment_path(o.out), train::format_experiment_config(c));
  if (c.variant.uses_lookup_anchor()) write_id_list(anchor_users_path(o.out), users);
  train::write_metrics_log(fs::path(o.out) / "metrics.tsv", run.log);
  std::cout << train::format_metrics_log(run.log) << "best_epoch = " << run.best_epoch
            << "\nbest_val_auc = " << run.best_auc << '\n';
  return 0;
}

// ---- export-ae

struct ExportAeOpts {
  std::string model;
  std::string features;
  std::string out;
};

int export_ae(const ExportAeOpts& o) {
  const auto c = train::load_experiment_config(experiment_path(o.model));
  const auto params = nd::load_checkpoint(checkpoint_path(o.model));
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(o.features)) {
    if (e.path().extension() == ".lmel") ids.push_back(e.path().stem().string());
  }
  if (ids.empty()) throw IngestionError("no .lmel files in " + o.features);
  std::sort(ids.begin(), ids.end());
  const auto store =
      train::export_audio_embeddings(params, train::load_audio_cache(o.features, ids),
                                     c.variant.context_duration);
  serving::save_store(o.out, store);
  std::cout << "exported " << store.size() << " audio embeddings\n";
  return 0;
}

// ---- recommend

struct RecommendOpts {
  std::string track_wav;
  std::string track_id;
  std::string user_id;
  std::string users;
  std::string tracks;
  std::string model;
  std::size_t n = 10;
};

int recommend(const RecommendOpts& o) {
  const int modes = !o.track_wav.empty() + !o.track_id.empty() + !o.user_id.empty();
  if (modes != 1) throw CLI::ValidationError("recommend", "give exactly one of --track, --track-id, --user");
  if (!o.user_id.empty()) {
    if (o.users.empty() || o.tracks.empty()) throw CLI::ValidationError("recommend", "--user needs --users and --tracks");
    const auto ue = serving::load_store(o.users);
    const auto ae = serving::load_store(o.tracks);
    print_matches(ae.top_n(ue.find(o.user_id), o.n));
    return 0;
  }
  if (o.users.empty()) throw CLI::ValidationError("recommend", "--users is required");
  const auto ue = serving::load_store(o.users);
  std::vector<float> ae;
  if (!o.track_id.empty()) {
    if (o.tracks.empty()) throw CLI::ValidationError("recommend", "--track-id needs --tracks");
    const auto store = serving::load_store(o.tracks);
    const auto v = store.find(o.track_id);
    ae.assign(v.begin(), v.end());
  } else {
    if (o.model.empty()) throw CLI::ValidationError("recommend", "--track needs --model");
    const auto c = train::load_experiment_config(experiment_path(o.model));
    const auto params = nd::load_checkpoint(checkpoint_path(o.model));
    const auto spec = audio::log_mel(audio::read_wav(o.track_wav));
    const auto t = model::embed_segment(params, audio::center_segment(spec, c.variant.context_duration));
    ae.assign(t.values().begin(), t.values().end());
  }
  print_matches(serving::recommend_new_track(ae, ue, o.n));
  return 0;
}

// ---- evaluate

struct EvaluateOpts {
  std::string scores;
  std::string model;
  std::string interactions;
  std::string features;
  std::string ue;
  std::string split = "test";
  std::string scores_out;
  double threshold = 0.0;
};

int evaluate(const EvaluateOpts& o) {
  std::vector<eval::ScoredPair> pairs;
  if (!o.scores.empty()) {
    pairs = eval::read_scores(o.scores);
  } else {
    if (o.model.empty() || o.interactions.empty() || o.features.empty()) {
      throw CLI::ValidationError("evaluate", "give --scores, or --model with --interactions and --features");
    }
    const auto c = train::load_experiment_config(experiment_path(o.model));
    const auto params = nd::load_checkpoint(checkpoint_path(o.model));
    const auto rows = data::read_interactions(o.interactions);
    const auto splits = make_splits(rows, c.split_mode, c.seed);
    const std::vector<data::Interaction>* part = nullptr;
    if (o.split == "train") part = &splits.train;
    else if (o.split == "val") part = &splits.val;
    else if (o.split == "test") part = &splits.test;
    else throw CLI::ValidationError("evaluate", "--split must be train, val or test");
    const auto users = c.variant.uses_lookup_anchor() ? read_id_list(anchor_users_path(o.model))
                                                      : std::vector<std::string>{};
    const auto anchors = anchors_for(c, o.ue, users);
    const auto audio = train::load_audio_cache(o.features, train::referenced_tracks(*part));
    pairs = train::score_rows(c, params, anchors, *part, audio);
  }
  if (!o.scores_out.empty()) eval::write_scores(o.scores_out, pairs);
  std::cout << eval::format_report(o.scores.empty() ? o.split : o.scores, eval::evaluate(pairs, o.threshold));
  return 0;
}

// ---- genre

struct GenreOpts {
  std::string manifest;
  std::string baseline;
  std::string ae;
  std::string out;
  transfer::GenreOptions options;
};

int genre(const GenreOpts& o) {
  const auto manifest = transfer::read_genre_manifest(o.manifest);
  const auto baseline = transfer::read_feature_file(o.baseline);
  std::optional<serving::EmbeddingStore> ae;
  if (!o.ae.empty()) ae = serving::load_store(o.ae);
  const auto report = transfer::genre_pipeline(manifest, baseline, ae ? &*ae : nullptr, o.options);
  const std::string text = transfer::format_genre_report(report);
  if (!o.out.empty()) io::write_file_atomic(o.out, text);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"embrec: user/audio embedding music recommender"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--workers", g.workers, "Worker threads for parallel sections (0 = all cores)");
  auto* seed_opt = app.add_option("--seed", g.seed, "Seed for splits, sampling and initialisation")
                       ->capture_default_str();
  app.add_flag("-v,--verbose", g.verbose, "Log progress to standard error");
  app.add_flag("-q,--quiet", g.quiet, "Only log errors");

  GenOpts gen;
  auto* c_gen = app.add_subcommand("gen-synthetic", "Write a planted-preference corpus");
  c_gen->add_option("--out", gen.out, "Output directory")->required();
  c_gen->add_option("--users", gen.spec.n_users, "Number of users")->capture_default_str();
  c_gen->add_option("--tracks", gen.spec.n_tracks, "Number of tracks")->capture_default_str();
  c_gen->add_option("--genres", gen.spec.n_genres, "Number of genres")->capture_default_str();
  c_gen->add_option("--likes", gen.spec.likes_per_user, "Liked tracks per user")->capture_default_str();
  c_gen->add_option("--dislikes", gen.spec.dislikes_per_user, "Disliked tracks per user")->capture_default_str();
  c_gen->add_option("--taste-noise", gen.spec.taste_noise, "Std dev of taste noise")->capture_default_str();
  c_gen->add_option("--seconds", gen.spec.track_seconds, "Track length in seconds")->capture_default_str();
  c_gen->add_flag("--no-audio", gen.no_audio, "Skip writing wav files");

  ExtractOpts ex;
  auto* c_ex = app.add_subcommand("extract-features", "Cache log-mel spectrograms for every wav");
  c_ex->add_option("--audio", ex.audio_dir, "Directory of .wav files")->required()->check(CLI::ExistingDirectory);
  c_ex->add_option("--out", ex.out, "Output directory for .lmel files")->required();

  TrainUserOpts tu;
  auto* c_tu = app.add_subcommand("train-user", "Train the user branch on training-split likes");
  c_tu->add_option("--interactions", tu.interactions, "Interaction manifest")->required();
  c_tu->add_option("--demographics", tu.demographics, "Demographics manifest");
  c_tu->add_option("--out", tu.out, "Output model directory")->required();
  c_tu->add_option("--split-mode", tu.split_mode, "per_user or disjoint_users")->capture_default_str();
  c_tu->add_option("--epochs", tu.config.epochs, "Epochs")->capture_default_str();
  c_tu->add_option("--negatives", tu.config.negatives, "Sampled negative classes per example")->capture_default_str();
  c_tu->add_option("--batch-size", tu.config.batch_size, "Examples per batch")->capture_default_str();
  c_tu->add_option("--lr0", tu.config.optimizer.lr0, "Initial learning rate")->capture_default_str();

  ExportUeOpts eu;
  auto* c_eu = app.add_subcommand("export-ue", "Write the user embedding store");
  c_eu->add_option("--model", eu.model, "train-user output directory")->required();
  c_eu->add_option("--interactions", eu.interactions, "Interaction manifest")->required();
  c_eu->add_option("--demographics", eu.demographics, "Demographics manifest");
  c_eu->add_option("--split-mode", eu.split_mode, "per_user or disjoint_users")->capture_default_str();
  c_eu->add_option("--out", eu.out, "Output store file")->required();

  TrainAudioOpts ta;
  auto* c_ta = app.add_subcommand("train-audio", "Train the audio branch against user anchors");
  c_ta->add_option("--config", ta.config_path, "Experiment config file (flags override it)");
  c_ta->add_option("--interactions", ta.interactions, "Interaction manifest")->required();
  c_ta->add_option("--features", ta.features, "Directory of .lmel files")->required();
  c_ta->add_option("--ue", ta.ue, "User embedding store (not used by dcue)");
  c_ta->add_option("--out", ta.out, "Output model directory")->required();
  c_ta->add_option("--variant", ta.variant, "basic_binary, multi, metric or dcue");
  c_ta->add_option("--negatives", ta.negatives, "Negatives per positive");
  c_ta->add_option("--margin", ta.margin, "Hinge margin");
  c_ta->add_option("--context", ta.context, "Context duration in seconds");
  c_ta->add_option("--epochs", ta.epochs, "Maximum epochs");
  c_ta->add_option("--batch-size", ta.batch_size, "Example groups per batch");
  c_ta->add_option("--patience", ta.patience, "Early-stop patience in epochs");
  c_ta->add_option("--lr0", ta.lr0, "Initial learning rate");
  c_ta->add_option("--split-mode", ta.split_mode, "per_user or disjoint_users");
  c_ta->add_option("--channels", ta.channels, "Conv widths, comma separated")->delimiter(',');

  ExportAeOpts ea;
  auto* c_ea = app.add_subcommand("export-ae", "Write the audio embedding store");
  c_ea->add_option("--model", ea.model, "train-audio output directory")->required();
  c_ea->add_option("--features", ea.features, "Directory of .lmel files")->required();
  c_ea->add_option("--out", ea.out, "Output store file")->required();

  RecommendOpts rc;
  auto* c_rc = app.add_subcommand("recommend", "Rank users for a track, or tracks for a user");
  c_rc->add_option("--track", rc.track_wav, "New track as a wav file (needs --model)");
  c_rc->add_option("--track-id", rc.track_id, "Track id in the --tracks store");
  c_rc->add_option("--user", rc.user_id, "User id in the --users store");
  c_rc->add_option("--users", rc.users, "User embedding store");
  c_rc->add_option("--tracks", rc.tracks, "Audio embedding store");
  c_rc->add_option("--model", rc.model, "train-audio output directory");
  c_rc->add_option("--n", rc.n, "Number of results")->capture_default_str();

  EvaluateOpts ev;
  auto* c_ev = app.add_subcommand("evaluate", "AUC and precision from a score file or a model");
  c_ev->add_option("--scores", ev.scores, "Rows of user, track, score, label");
  c_ev->add_option("--model", ev.model, "train-audio output directory");
  c_ev->add_option("--interactions", ev.interactions, "Interaction manifest");
  c_ev->add_option("--features", ev.features, "Directory of .lmel files");
  c_ev->add_option("--ue", ev.ue, "User embedding store (not used by dcue)");
  c_ev->add_option("--split", ev.split, "train, val or test")->capture_default_str();
  c_ev->add_option("--scores-out", ev.scores_out, "Also write the scored rows here");
  c_ev->add_option("--threshold", ev.threshold, "Precision threshold")->capture_default_str();

  GenreOpts gr;
  auto* c_gr = app.add_subcommand("genre", "PCA + RBF SVM genre classification with and without AE");
  c_gr->add_option("--manifest", gr.manifest, "Rows of track_id, genre, split")->required();
  c_gr->add_option("--baseline", gr.baseline, "Baseline feature file")->required();
  c_gr->add_option("--ae", gr.ae, "Audio embedding store to concatenate");
  c_gr->add_option("--pca-dim", gr.options.pca_dim, "PCA output dimension")->capture_default_str();
  c_gr->add_option("--gamma", gr.options.svm.gamma, "RBF bandwidth")->capture_default_str();
  c_gr->add_option("--C", gr.options.svm.C, "SVM penalty")->capture_default_str();
  c_gr->add_option("--out", gr.out, "Also write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  g.seed_set = seed_opt->count() > 0;
  set_worker_count(g.workers);
  log::set_level(g.quiet ? log::Level::quiet : g.verbose ? log::Level::info : log::Level::warn);

  try {
    if (*c_gen) return gen_synthetic(gen, g);
    if (*c_ex) return extract_features(ex);
    if (*c_tu) return train_user(tu, g);
    if (*c_eu) return export_ue(eu, g);
    if (*c_ta) return train_audio(ta, g, *c_ta);
    if (*c_ea) return export_ae(ea);
    if (*c_rc) return recommend(rc);
    if (*c_ev) return evaluate(ev);
    if (*c_gr) return genre(gr);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
