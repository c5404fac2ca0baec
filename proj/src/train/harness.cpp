#include "embrec/train/harness.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "embrec/binary_io.hpp"
#include "embrec/errors.hpp"
#include "embrec/log.hpp"
#include "embrec/model/audio_cnn.hpp"
#include "embrec/parallel.hpp"
#include "embrec/rng.hpp"

namespace embrec::train {

namespace {

void require_audio(const AudioCache& audio, const std::vector<data::Interaction>& rows,
                   const char* split) {
  std::vector<std::string> missing;
  for (const std::string& id : referenced_tracks(rows)) {
    if (!audio.count(id)) missing.push_back(id);
  }
  if (missing.empty()) return;
  std::string msg = std::string(split) + " split references " + std::to_string(missing.size()) +
                    " track(s) without audio:";
  for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i) msg += " " + missing[i];
  if (missing.size() > 10) msg += " ...";
  throw IngestionError(msg);
}

// One planned example group; segments are cut when the batch runs.
struct Plan {
  std::string user;
  std::string positive;
  std::vector<std::string> negatives;
  int label = 1;
};

struct UserRows {
  std::vector<std::string> liked;
  std::vector<std::string> disliked;
};

std::map<std::string, UserRows> rows_by_user(const std::vector<data::Interaction>& rows) {
  std::map<std::string, UserRows> out;
  for (const auto& r : rows) {
    auto& u = out[r.user_id];
    (r.label == 1 ? u.liked : u.disliked).push_back(r.track_id);
  }
  return out;
}

std::vector<Plan> plan_epoch(const model::VariantConfig& v, const std::map<std::string, UserRows>& users,
                             Rng& rng, std::size_t& skipped_users) {
  std::vector<Plan> plans;
  skipped_users = 0;
  for (const auto& [user, rows] : users) {
    if (rows.liked.empty()) continue;
    if (!v.paired()) {
      // liked rows plus as many disliked ones, cycling a shuffled list
      plans.reserve(plans.size() + 2 * rows.liked.size());
      for (const auto& t : rows.liked) plans.push_back({user, t, {}, 1});
      if (rows.disliked.empty()) continue;
      std::vector<std::string> pool = rows.disliked;
      rng.shuffle(pool);
      for (std::size_t i = 0; i < rows.liked.size(); ++i) {
        plans.push_back({user, pool[i % pool.size()], {}, 0});
      }
      continue;
    }
    if (rows.disliked.size() < v.n_negatives) {
      ++skipped_users;
      continue;
    }
    for (const auto& t : rows.liked) {
      // partial Fisher-Yates: n distinct disliked tracks
      std::vector<std::string> pool = rows.disliked;
      for (std::size_t i = 0; i < v.n_negatives; ++i) {
        std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
      }
      pool.resize(v.n_negatives);
      plans.push_back({user, t, std::move(pool), 1});
    }
  }
  return plans;
}

std::vector<float> anchor_vector(const ExperimentConfig& config, const nd::ParameterSet& params,
                                 const model::AnchorTable& anchors, const std::string& user) {
  nd::Graph g;
  const nd::Var a = model::user_anchor(g, config.variant, params, anchors, user);
  return {a.value().values().begin(), a.value().values().end()};
}

double cosine(std::span<const float> a, std::span<const float> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += double(a[i]) * b[i];
    aa += double(a[i]) * a[i];
    bb += double(b[i]) * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw DegenerateInputError("score: zero-norm embedding");
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

}  // namespace

AudioCache load_audio_cache(const std::filesystem::path& dir, const std::vector<std::string>& ids) {
  AudioCache cache;
  std::vector<std::string> missing;
  for (const auto& id : ids) {
    const auto path = dir / (id + ".lmel");
    if (!std::filesystem::exists(path)) {
      missing.push_back(id);
      continue;
    }
    cache.emplace(id, audio::load_log_mel(path));
  }
  if (!missing.empty()) {
    std::string msg = "no cached log-mel features in " + dir.string() + " for " +
                      std::to_string(missing.size()) + " track(s):";
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i) msg += " " + missing[i];
    throw IngestionError(msg);
  }
  return cache;
}

std::vector<std::string> referenced_tracks(const std::vector<data::Interaction>& rows) {
  std::set<std::string> ids;
  for (const auto& r : rows) ids.insert(r.track_id);
  return {ids.begin(), ids.end()};
}

nd::ParameterSet init_experiment_params(const ExperimentConfig& config,
                                        const model::AnchorTable& anchors) {
  return model::init_audio_params(config.cnn, config.seed,
                                  config.variant.uses_lookup_anchor() ? anchors.size() : 0);
}

TrainingRun run_training(const ExperimentConfig& config, const Splits& splits,
                         const AudioCache& audio, const model::AnchorTable& anchors,
                         const nd::ParameterSet* init) {
  config.validate();
  require_audio(audio, splits.train, "train");
  require_audio(audio, splits.val, "validation");
  TrainingRun run;
  run.params = init ? *init : init_experiment_params(config, anchors);
  if (config.epochs == 0) return run;
  if (splits.train.empty()) throw ContractError("run_training: empty training split");

  const double d = config.variant.context_duration;
  const auto users = rows_by_user(splits.train);
  NesterovOptimizer opt(config.optimizer);
  nd::ParameterSet best = run.params;
  run.best_auc = -1.0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng rng(Rng::mix(config.seed, epoch, 0x9A7));
    std::size_t skipped = 0;
    std::vector<Plan> plans = plan_epoch(config.variant, users, rng, skipped);
    if (skipped > 0 && epoch == 1) {
      log::warn("skipping " + std::to_string(skipped) + " user(s) with fewer than " +
                std::to_string(config.variant.n_negatives) + " disliked tracks");
    }
    if (plans.empty()) throw ContractError("run_training: no example groups in the training split");
    rng.shuffle(plans);

    double total = 0.0;
    for (std::size_t start = 0; start < plans.size(); start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, plans.size() - start);
      const nd::ParameterSet look = opt.lookahead(run.params);
      std::vector<nd::GradMap> grads(count);
      std::vector<double> losses(count);
      parallel_for(count, [&](std::size_t j) {
        const Plan& p = plans[start + j];
        auto cut = [&](const std::string& track, std::size_t slot) {
          return audio::sample_segment(audio.at(track), d,
                                       Rng::mix(config.seed, epoch, (start + j) * 1024 + slot));
        };
        const audio::LogMelSegment pos = cut(p.positive, 0);
        std::vector<audio::LogMelSegment> negs;
        negs.reserve(p.negatives.size());
        for (std::size_t k = 0; k < p.negatives.size(); ++k) negs.push_back(cut(p.negatives[k], k + 1));
        model::ExampleGroup group{p.user, &pos, {}, p.label};
        for (const auto& s : negs) group.negatives.push_back(&s);
        nd::Graph g;
        const nd::Var loss = model::group_loss(g, config.variant, look, anchors, group);
        losses[j] = loss.value().item();
        grads[j] = g.backward(loss);
      });
      nd::GradMap sum;
      for (std::size_t j = 0; j < count; ++j) {
        nd::add_scaled(sum, grads[j], 1.0f / static_cast<float>(count));
        total += losses[j];
      }
      opt.step(run.params, sum);
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = total / static_cast<double>(plans.size());
    const auto pairs = score_rows(config, run.params, anchors, splits.val, audio);
    m.val_auc = eval::auc(pairs);
    try {
      m.val_precision = eval::precision(pairs, 0.0);
    } catch (const UndefinedMetricError&) {
      m.val_precision = std::numeric_limits<double>::quiet_NaN();
    }
    run.log.push_back(m);
    log::info(config.variant.label() + " epoch " + std::to_string(epoch) + " loss " +
              std::to_string(m.train_loss) + " val AUC " + std::to_string(m.val_auc));
    if (m.val_auc > run.best_auc) {
      run.best_auc = m.val_auc;
      run.best_epoch = epoch;
      best = run.params;
    } else if (epoch - run.best_epoch >= config.patience) {
      log::info("early stop after epoch " + std::to_string(epoch));
      break;
    }
  }
  run.params = std::move(best);
  return run;
}

serving::EmbeddingStore export_audio_embeddings(const nd::ParameterSet& params,
                                                const AudioCache& audio, double context_duration) {
  std::vector<const std::pair<const std::string, audio::LogMelSpectrogram>*> items;
  for (const auto& entry : audio) items.push_back(&entry);
  std::vector<serving::Entry> entries(items.size());
  parallel_for(items.size(), [&](std::size_t i) {
    const nd::Tensor ae =
        model::embed_segment(params, audio::center_segment(items[i]->second, context_duration));
    entries[i] = {items[i]->first, {ae.values().begin(), ae.values().end()}};
  });
  return serving::EmbeddingStore::build(serving::StoreKind::audio, std::move(entries),
                                        params.at("proj.weight").dim(0));
}

std::vector<eval::ScoredPair> score_rows(const ExperimentConfig& config,
                                         const nd::ParameterSet& params,
                                         const model::AnchorTable& anchors,
                                         const std::vector<data::Interaction>& rows,
                                         const AudioCache& audio) {
  const std::vector<std::string> tracks = referenced_tracks(rows);
  std::map<std::string, std::size_t> track_row;
  for (std::size_t i = 0; i < tracks.size(); ++i) track_row[tracks[i]] = i;
  std::vector<std::vector<float>> ae(tracks.size());
  parallel_for(tracks.size(), [&](std::size_t i) {
    const auto it = audio.find(tracks[i]);
    if (it == audio.end()) throw IngestionError("no audio for track " + tracks[i]);
    const nd::Tensor t = model::embed_segment(
        params, audio::center_segment(it->second, config.variant.context_duration));
    ae[i].assign(t.values().begin(), t.values().end());
  });
  std::map<std::string, std::vector<float>> anchor;
  std::vector<eval::ScoredPair> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    auto it = anchor.find(r.user_id);
    if (it == anchor.end()) {
      it = anchor.emplace(r.user_id, anchor_vector(config, params, anchors, r.user_id)).first;
    }
    out.push_back({r.user_id, r.track_id, cosine(ae[track_row.at(r.track_id)], it->second), r.label});
  }
  return out;
}

std::string format_metrics_log(const std::vector<EpochMetrics>& log) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "epoch\ttrain_loss\tval_precision\tval_auc\n";
  for (const auto& m : log) {
    os << m.epoch << '\t' << m.train_loss << '\t';
    if (std::isnan(m.val_precision)) {
      os << "nan";
    } else {
      os << m.val_precision;
    }
    os << '\t' << m.val_auc << '\n';
  }
  return os.str();
}

void write_metrics_log(const std::filesystem::path& path, const std::vector<EpochMetrics>& log) {
  io::write_file_atomic(path, format_metrics_log(log));
}

}  // namespace embrec::train
