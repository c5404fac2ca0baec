#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <tuple>

#include "embrec/audio/spectrogram.hpp"
#include "embrec/errors.hpp"
#include "embrec/parallel.hpp"
#include "embrec/rng.hpp"
#include "embrec/synth/corpus.hpp"
#include "embrec/train/config.hpp"
#include "embrec/train/harness.hpp"
#include "embrec/train/optimizer.hpp"
#include "embrec/train/split.hpp"

using namespace embrec;
using namespace embrec::train;

namespace {

std::vector<float> vals(const nd::Tensor& t) { return {t.values().begin(), t.values().end()}; }

std::vector<data::Interaction> user_rows(const std::string& user, int liked, int disliked) {
  std::vector<data::Interaction> rows;
  for (int i = 0; i < liked + disliked; ++i) {
    rows.push_back({user, user + "_t" + std::to_string(i), "al", "ar", i < liked ? 1 : 0, i});
  }
  return rows;
}

std::size_t count_label(const std::vector<data::Interaction>& rows, int label) {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.label == label;
  return n;
}

// Tiny synthetic corpus with audio, shared by the run-level tests.
struct TinySetup {
  Splits splits;
  AudioCache audio;
  model::AnchorTable anchors = model::AnchorTable::lookup({});
  ExperimentConfig config;

  TinySetup() {
    synth::SyntheticSpec spec;
    spec.n_users = 4;
    spec.n_tracks = 48;
    spec.n_genres = 2;
    spec.likes_per_user = 10;
    spec.dislikes_per_user = 10;
    spec.track_seconds = 3.5;
    spec.seed = 7;
    const synth::Corpus corpus = synth::generate(spec);
    for (const auto& t : corpus.tracks) audio.emplace(t.id, audio::log_mel(synth::render_track(spec, t)));
    splits = split_dataset(corpus.interactions, {0.6, 0.2, 0.2, SplitMode::per_user, 1, 10});
    std::vector<serving::Entry> ue;
    Rng rng(3);
    for (const auto& u : corpus.users) {
      std::vector<float> v(40);
      for (float& x : v) x = static_cast<float>(rng.normal());
      ue.push_back({u.id, v});
    }
    anchors = model::AnchorTable::frozen(serving::EmbeddingStore::build(serving::StoreKind::user, ue));
    config.variant = model::VariantConfig{};
    config.cnn.channels = {2, 2, 2, 2, 2};
    config.epochs = 2;
    config.batch_size = 8;
  }
};

const TinySetup& tiny() {
  static const TinySetup s;
  return s;
}

}  // namespace

TEST(Split, TenLikedGoSixTwoTwo) {
  const auto rows = user_rows("u", 10, 10);
  const Splits s = split_dataset(rows, {0.6, 0.2, 0.2, SplitMode::per_user, 5, 10});
  EXPECT_EQ(count_label(s.train, 1), 6u);
  EXPECT_EQ(count_label(s.val, 1), 2u);
  EXPECT_EQ(count_label(s.test, 1), 2u);
  EXPECT_EQ(count_label(s.train, 0), 6u);
  EXPECT_EQ(count_label(s.val, 0), 2u);
  EXPECT_EQ(count_label(s.test, 0), 2u);
}

TEST(Split, DisjointUsersSixTwoTwo) {
  std::vector<data::Interaction> rows;
  for (int u = 0; u < 10; ++u) {
    const auto r = user_rows("u" + std::to_string(u), 3, 2);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  const Splits s = split_dataset(rows, {0.6, 0.2, 0.2, SplitMode::disjoint_users, 5, 10});
  auto users = [](const std::vector<data::Interaction>& part) {
    std::set<std::string> out;
    for (const auto& r : part) out.insert(r.user_id);
    return out;
  };
  const auto tr = users(s.train), va = users(s.val), te = users(s.test);
  EXPECT_EQ(tr.size(), 6u);
  EXPECT_EQ(va.size(), 2u);
  EXPECT_EQ(te.size(), 2u);
  for (const auto& u : va) EXPECT_FALSE(tr.count(u) || te.count(u));
  for (const auto& u : te) EXPECT_FALSE(tr.count(u));
  EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), rows.size());
}

TEST(Split, RandomCorpusPartitionsAreDisjointAndExhaustive) {
  synth::SyntheticSpec spec;
  spec.n_users = 30;
  spec.n_tracks = 200;
  spec.seed = 19;
  const auto rows = synth::generate(spec).interactions;
  for (auto mode : {SplitMode::per_user, SplitMode::disjoint_users}) {
    const Splits s = split_dataset(rows, {0.6, 0.2, 0.2, mode, 3, 10});
    std::set<std::tuple<std::string, std::string, int>> seen;
    std::size_t total = 0;
    for (const auto* part : {&s.train, &s.val, &s.test}) {
      for (const auto& r : *part) {
        EXPECT_TRUE(seen.emplace(r.user_id, r.track_id, r.label).second);
        ++total;
      }
    }
    EXPECT_EQ(total, rows.size());
    const Splits again = split_dataset(rows, {0.6, 0.2, 0.2, mode, 3, 10});
    ASSERT_EQ(again.val.size(), s.val.size());
    for (std::size_t i = 0; i < s.val.size(); ++i) EXPECT_EQ(again.val[i].track_id, s.val[i].track_id);
  }
}

TEST(Split, UserBelowFloorIsIngestionError) {
  auto rows = user_rows("ok", 10, 10);
  const auto few = user_rows("short", 9, 12);
  rows.insert(rows.end(), few.begin(), few.end());
  try {
    split_dataset(rows, {0.6, 0.2, 0.2, SplitMode::per_user, 1, 10});
    FAIL() << "expected IngestionError";
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("short"), std::string::npos);
  }
}

TEST(Nesterov, ZeroGradientLeavesParamsAlone) {
  nd::ParameterSet p{{"w", nd::Tensor({3}, std::vector<float>{1, -2, 3})}};
  const nd::ParameterSet before = p;
  NesterovOptimizer opt;
  opt.step(p, {{"w", nd::Tensor({3}, 0.0f)}});
  EXPECT_EQ(vals(p.at("w")), vals(before.at("w")));
}

TEST(Nesterov, ScheduleWithoutDecayIsConstant) {
  NesterovOptimizer opt({0.1, 0.9, 0.0});
  nd::ParameterSet p{{"w", nd::Tensor({1}, 1.0f)}};
  for (int t = 0; t < 50; ++t) {
    EXPECT_EQ(opt.learning_rate(), 0.1);
    opt.step(p, {{"w", nd::Tensor({1}, 0.5f)}});
  }
  NesterovOptimizer decaying({0.1, 0.9, 0.5});
  double last = decaying.learning_rate();
  for (int t = 0; t < 20; ++t) {
    decaying.step(p, {{"w", nd::Tensor({1}, 0.0f)}});
    EXPECT_LE(decaying.learning_rate(), last);
    last = decaying.learning_rate();
  }
}

TEST(Nesterov, ScalarQuadraticMatchesSimulation) {
  NesterovOptimizer opt;
  nd::ParameterSet p{{"w", nd::Tensor({1}, 1.0f)}};
  // oracle: the same recurrence in double
  double w = 1.0, v = 0.0;
  for (int t = 0; t < 200; ++t) {
    const double lr = 0.1 / (1.0 + 1e-6 * t);
    const double g = w + 0.9 * v;
    v = 0.9 * v - lr * g;
    w += v;
    const nd::ParameterSet look = opt.lookahead(p);
    opt.step(p, {{"w", look.at("w")}});  // grad of w^2/2 is w
    ASSERT_NEAR(p.at("w").values()[0], w, 1e-5) << "step " << t;
  }
  EXPECT_LT(std::abs(p.at("w").values()[0]), 1e-3);
  EXPECT_EQ(opt.steps(), 200u);
}

TEST(Nesterov, TenDimQuadraticConverges) {
  Rng rng(4);
  std::vector<float> a(10), c(10), w0(10);
  for (int i = 0; i < 10; ++i) {
    a[i] = static_cast<float>(rng.uniform(0.2, 1.0));
    c[i] = static_cast<float>(rng.uniform(-2, 2));
    w0[i] = static_cast<float>(rng.uniform(-2, 2));
  }
  NesterovOptimizer opt;
  nd::ParameterSet p{{"w", nd::Tensor({10}, w0)}};
  for (int t = 0; t < 200; ++t) {
    const auto look = vals(opt.lookahead(p).at("w"));
    std::vector<float> g(10);
    for (int i = 0; i < 10; ++i) g[i] = a[i] * (look[i] - c[i]);
    opt.step(p, {{"w", nd::Tensor({10}, g)}});
  }
  double f = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double d = p.at("w").values()[i] - c[i];
    EXPECT_LT(std::abs(d), 1e-3);
    f += 0.5 * a[i] * d * d;
  }
  EXPECT_LT(f, 1e-3);
}

TEST(Nesterov, ShapeMismatchIsContractError) {
  NesterovOptimizer opt;
  nd::ParameterSet p{{"w", nd::Tensor({3}, 0.0f)}};
  EXPECT_THROW(opt.step(p, {{"w", nd::Tensor({2}, 0.0f)}}), ContractError);
  EXPECT_THROW(opt.step(p, {{"x", nd::Tensor({3}, 0.0f)}}), ContractError);
}

TEST(Config, RoundTripAndErrors) {
  const ExperimentConfig c = parse_experiment_config(
      "# comment\nvariant = dcue\nn_negatives = 4\nmargin = 0.3\ncontext_duration_s = 5\n"
      "batch_size = 16\nepochs = 7\nseed = 9\nlr0 = 0.05\nsplit_mode = disjoint_users\n"
      "channels = 8,16,16,32,32\n");
  EXPECT_EQ(c.variant.kind, model::VariantKind::dcue);
  EXPECT_EQ(c.variant.n_negatives, 4u);
  EXPECT_EQ(c.batch_size, 16u);
  EXPECT_EQ(c.split_mode, SplitMode::disjoint_users);
  EXPECT_EQ(c.cnn.channels, (std::vector<std::size_t>{8, 16, 16, 32, 32}));
  const ExperimentConfig back = parse_experiment_config(format_experiment_config(c));
  EXPECT_EQ(format_experiment_config(back), format_experiment_config(c));
  EXPECT_EQ(back.optimizer.lr0, 0.05);

  EXPECT_THROW(parse_experiment_config("learning_rate = 0.1\n"), ParseError);
  EXPECT_THROW(parse_experiment_config("epochs = many\n"), ParseError);
  // range checks run in validate(), after CLI overrides are applied
  EXPECT_THROW(parse_experiment_config("variant = metric\nmargin = -1\n").validate(), ContractError);
}

TEST(Harness, ZeroEpochsReturnsInitialization) {
  const TinySetup& s = tiny();
  ExperimentConfig c = s.config;
  c.epochs = 0;
  const TrainingRun run = run_training(c, s.splits, s.audio, s.anchors);
  EXPECT_TRUE(run.log.empty());
  EXPECT_EQ(run.best_epoch, 0u);
  const nd::ParameterSet init = init_experiment_params(c, s.anchors);
  ASSERT_EQ(run.params.size(), init.size());
  for (const auto& [name, t] : init) EXPECT_EQ(vals(run.params.at(name)), vals(t)) << name;
}

TEST(Harness, IdenticalSeedsGiveIdenticalLogs) {
  const TinySetup& s = tiny();
  set_worker_count(1);
  const TrainingRun a = run_training(s.config, s.splits, s.audio, s.anchors);
  set_worker_count(4);
  const TrainingRun b = run_training(s.config, s.splits, s.audio, s.anchors);
  set_worker_count(0);
  ASSERT_EQ(a.log.size(), 2u);
  EXPECT_EQ(format_metrics_log(a.log), format_metrics_log(b.log));
  for (const auto& [name, t] : a.params) EXPECT_EQ(vals(b.params.at(name)), vals(t)) << name;
  for (const auto& m : a.log) {
    EXPECT_TRUE(std::isfinite(m.train_loss));
    EXPECT_GE(m.val_auc, 0.0);
    EXPECT_LE(m.val_auc, 1.0);
  }
  EXPECT_EQ(format_metrics_log(a.log).substr(0, 38), "epoch\ttrain_loss\tval_precision\tval_auc");
}

TEST(Harness, MissingAudioIsIngestionError) {
  const TinySetup& s = tiny();
  AudioCache partial = s.audio;
  partial.erase(s.splits.train.front().track_id);
  EXPECT_THROW(run_training(s.config, s.splits, partial, s.anchors), IngestionError);
  EXPECT_THROW(load_audio_cache("/nonexistent-dir", {"a"}), IngestionError);
}
