#include "embrec/user/user_branch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "embrec/errors.hpp"
#include "embrec/log.hpp"
#include "embrec/nd/ops.hpp"
#include "embrec/parallel.hpp"
#include "embrec/rng.hpp"
#include "embrec/text.hpp"

namespace embrec::user {

using nd::Graph;
using nd::ParameterSet;
using nd::Tensor;
using nd::Var;

UserVocab build_vocab(const std::vector<data::Interaction>& rows, const data::Demographics& demo) {
  UserVocab v;
  for (const auto& r : rows) {
    v.tracks.add(r.track_id);
    v.albums.add(r.album_id);
    v.artists.add(r.artist_id);
  }
  for (const auto& [user, feats] : demo) {
    for (const auto& f : feats) v.demographics.add(f);
  }
  return v;
}

void save_vocab(const std::filesystem::path& path, const UserVocab& vocab) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path.string());
  auto dump = [&](const char* kind, const Vocabulary& v) {
    for (const auto& name : v.names()) out << kind << '\t' << name << '\n';
  };
  dump("track", vocab.tracks);
  dump("album", vocab.albums);
  dump("artist", vocab.artists);
  dump("demographic", vocab.demographics);
}

UserVocab load_vocab(const std::filesystem::path& path) {
  UserVocab v;
  for (const std::string& line : text::read_lines(path)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(path.string() + ": bad vocabulary line");
    const std::string kind = line.substr(0, tab), name = line.substr(tab + 1);
    if (kind == "track") v.tracks.add(name);
    else if (kind == "album") v.albums.add(name);
    else if (kind == "artist") v.artists.add(name);
    else if (kind == "demographic") v.demographics.add(name);
    else throw FormatError(path.string() + ": unknown vocabulary kind '" + kind + "'");
  }
  return v;
}

UserHistory history_from(const UserVocab& vocab, const std::vector<const data::Interaction*>& likes,
                         const std::vector<std::string>& demographics) {
  UserHistory h;
  for (const data::Interaction* r : likes) {
    h.tracks.push_back(vocab.tracks.at(r->track_id));
    h.albums.push_back(vocab.albums.at(r->album_id));
    h.artists.push_back(vocab.artists.at(r->artist_id));
  }
  for (const auto& f : demographics) h.demographics.push_back(vocab.demographics.at(f));
  return h;
}

ParameterSet init_params(const UserVocab& vocab, const UserBranchConfig& c) {
  const std::size_t d = kEmbeddingDim;
  if (vocab.tracks.size() < 2) throw ContractError("user branch: need at least two tracks");
  auto table = [&](std::size_t rows, std::uint64_t salt) {
    return nd::glorot_uniform({std::max<std::size_t>(rows, 1), d}, d, d, Rng::mix(c.seed, salt));
  };
  ParameterSet p;
  p.emplace("lookup.track", table(vocab.tracks.size(), 1));
  p.emplace("lookup.album", table(vocab.albums.size(), 2));
  p.emplace("lookup.artist", table(vocab.artists.size(), 3));
  p.emplace("lookup.demographic", table(vocab.demographics.size(), 4));
  p.emplace("hidden1.weight", nd::glorot_uniform({c.hidden1, 4 * d}, 4 * d, c.hidden1, Rng::mix(c.seed, 5)));
  p.emplace("hidden1.bias", Tensor({c.hidden1}, 0.0f));
  p.emplace("hidden2.weight", nd::glorot_uniform({c.hidden2, c.hidden1}, c.hidden1, c.hidden2, Rng::mix(c.seed, 6)));
  p.emplace("hidden2.bias", Tensor({c.hidden2}, 0.0f));
  p.emplace("ue.weight", nd::glorot_uniform({d, c.hidden2}, c.hidden2, d, Rng::mix(c.seed, 7)));
  p.emplace("ue.bias", Tensor({d}, 0.0f));
  p.emplace("classes", table(vocab.tracks.size(), 8));
  return p;
}

Var user_tower(Graph& g, const ParameterSet& params, const UserHistory& h, float slope) {
  auto param = [&](const char* name) { return g.parameter(name, params.at(name)); };
  const Var parts[] = {
      nd::embedding_mean(param("lookup.track"), h.tracks),
      nd::embedding_mean(param("lookup.album"), h.albums),
      nd::embedding_mean(param("lookup.artist"), h.artists),
      nd::embedding_mean(param("lookup.demographic"), h.demographics),
  };
  Var x = nd::concat(parts);
  x = nd::leaky_relu(nd::dense(x, param("hidden1.weight"), param("hidden1.bias")), slope);
  x = nd::leaky_relu(nd::dense(x, param("hidden2.weight"), param("hidden2.bias")), slope);
  return nd::dense(x, param("ue.weight"), param("ue.bias"));
}

Tensor embed_user(const UserHistory& history, const ParameterSet& params, float slope) {
  Graph g;
  return user_tower(g, params, history, slope).value();
}

Var sampled_class_loss(Var ue, Var classes, std::uint32_t positive,
                       std::span<const std::uint32_t> negatives) {
  if (negatives.empty()) throw ContractError("sampled_class_loss: at least one negative required");
  std::vector<std::uint32_t> ids{positive};
  for (std::uint32_t n : negatives) {
    if (n == positive) throw ContractError("sampled_class_loss: positive listed as a negative");
    ids.push_back(n);
  }
  return nd::softmax_cross_entropy(nd::gather_dot(classes, ids, ue), 0);
}

namespace {

std::map<std::string, std::vector<const data::Interaction*>> likes_by_user(
    const std::vector<data::Interaction>& rows) {
  std::map<std::string, std::vector<const data::Interaction*>> out;
  for (const auto& r : rows) {
    if (r.label == 1) out[r.user_id].push_back(&r);
  }
  for (auto& [u, v] : out) {
    std::stable_sort(v.begin(), v.end(),
                     [](const auto* a, const auto* b) { return a->timestamp < b->timestamp; });
  }
  return out;
}

const std::vector<std::string>& demo_of(const data::Demographics& demo, const std::string& user) {
  static const std::vector<std::string> none;
  const auto it = demo.find(user);
  return it == demo.end() ? none : it->second;
}

std::vector<std::uint32_t> draw_negatives(Rng& rng, std::size_t vocab, std::uint32_t positive,
                                          std::size_t k) {
  std::vector<std::uint32_t> out;
  out.reserve(k);
  while (out.size() < k) {
    const auto n = static_cast<std::uint32_t>(rng.below(vocab));
    if (n != positive) out.push_back(n);
  }
  return out;
}

double example_loss(const ParameterSet& params, const Example& ex,
                    std::span<const std::uint32_t> negatives, float slope, nd::GradMap* grads) {
  Graph g;
  Var ue = user_tower(g, params, ex.history, slope);
  Var loss = sampled_class_loss(ue, g.parameter("classes", params.at("classes")), ex.target, negatives);
  if (grads) *grads = g.backward(loss);
  return loss.value().item();
}

}  // namespace

std::vector<Example> prefix_examples(const UserVocab& vocab,
                                     const std::vector<data::Interaction>& rows,
                                     const data::Demographics& demo) {
  std::vector<Example> out;
  for (const auto& [user, likes] : likes_by_user(rows)) {
    for (std::size_t k = 1; k < likes.size(); ++k) {
      std::vector<const data::Interaction*> prefix(likes.begin(), likes.begin() + static_cast<long>(k));
      out.push_back({history_from(vocab, prefix, demo_of(demo, user)),
                     vocab.tracks.at(likes[k]->track_id)});
    }
  }
  return out;
}

std::vector<Example> heldout_examples(const UserVocab& vocab,
                                      const std::vector<data::Interaction>& history_rows,
                                      const std::vector<data::Interaction>& heldout_rows,
                                      const data::Demographics& demo) {
  const auto hist = user_histories(vocab, history_rows, demo);
  std::vector<Example> out;
  for (const auto& r : heldout_rows) {
    if (r.label != 1) continue;
    const auto it = hist.find(r.user_id);
    UserHistory h = it != hist.end() ? it->second : history_from(vocab, {}, demo_of(demo, r.user_id));
    out.push_back({std::move(h), vocab.tracks.at(r.track_id)});
  }
  return out;
}

std::map<std::string, UserHistory> user_histories(const UserVocab& vocab,
                                                  const std::vector<data::Interaction>& rows,
                                                  const data::Demographics& demo) {
  std::map<std::string, UserHistory> out;
  const auto likes = likes_by_user(rows);
  for (const auto& [user, l] : likes) out[user] = history_from(vocab, l, demo_of(demo, user));
  for (const auto& r : rows) {
    if (!out.count(r.user_id)) out[r.user_id] = history_from(vocab, {}, demo_of(demo, r.user_id));
  }
  return out;
}

double mean_loss(const ParameterSet& params, const std::vector<Example>& examples,
                 std::size_t negatives, std::uint64_t seed, float slope) {
  if (examples.empty()) throw ContractError("mean_loss: no examples");
  const std::size_t vocab = params.at("classes").dim(0);
  std::vector<double> losses(examples.size());
  parallel_for(examples.size(), [&](std::size_t i) {
    Rng rng(Rng::mix(seed, i));
    const auto negs = draw_negatives(rng, vocab, examples[i].target, negatives);
    losses[i] = example_loss(params, examples[i], negs, slope, nullptr);
  });
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

TrainResult train_user_branch(const UserVocab& vocab, std::vector<Example> examples,
                              const std::vector<Example>& validation, const UserBranchConfig& config,
                              const ParameterSet* init) {
  if (examples.empty()) throw ContractError("train_user_branch: empty dataset");
  if (config.batch_size == 0 || config.negatives == 0) {
    throw ContractError("train_user_branch: batch size and negatives must be positive");
  }
  TrainResult result;
  result.params = init ? *init : init_params(vocab, config);
  const std::size_t n_classes = result.params.at("classes").dim(0);
  train::NesterovOptimizer opt(config.optimizer);
  Rng order_rng(Rng::mix(config.seed, 0x05E7));
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t step = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(order);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - start);
      const ParameterSet look = opt.lookahead(result.params);
      std::vector<nd::GradMap> grads(count);
      std::vector<double> losses(count);
      parallel_for(count, [&](std::size_t j) {
        const Example& ex = examples[order[start + j]];
        Rng rng(Rng::mix(config.seed, step, j + 1));
        const auto negs = draw_negatives(rng, n_classes, ex.target, config.negatives);
        losses[j] = example_loss(look, ex, negs, config.slope, &grads[j]);
      });
      nd::GradMap sum;
      for (std::size_t j = 0; j < count; ++j) {
        nd::add_scaled(sum, grads[j], 1.0f / static_cast<float>(count));
        total += losses[j];
      }
      opt.step(result.params, sum);
      ++step;
    }
    result.train_loss.push_back(total / static_cast<double>(examples.size()));
    if (!validation.empty()) {
      result.val_loss.push_back(mean_loss(result.params, validation, config.negatives,
                                          Rng::mix(config.seed, 0x7A1), config.slope));
    }
    log::info("user branch epoch " + std::to_string(epoch + 1) + " train loss " +
              std::to_string(result.train_loss.back()) +
              (validation.empty() ? "" : " val loss " + std::to_string(result.val_loss.back())));
  }
  return result;
}

std::vector<std::uint32_t> rank_tracks(const ParameterSet& params, std::span<const float> ue,
                                       const std::vector<bool>& exclude) {
  const Tensor& classes = params.at("classes");
  const std::size_t n = classes.dim(0), d = classes.dim(1);
  if (ue.size() != d) throw DimensionError("rank_tracks: embedding width mismatch");
  std::vector<double> score(n);
  for (std::size_t t = 0; t < n; ++t) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) s += static_cast<double>(classes[t * d + i]) * ue[i];
    score[t] = s;
  }
  std::vector<std::uint32_t> out;
  for (std::uint32_t t = 0; t < n; ++t) {
    if (t < exclude.size() && exclude[t]) continue;
    out.push_back(t);
  }
  std::stable_sort(out.begin(), out.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return score[a] > score[b]; });
  return out;
}

serving::EmbeddingStore export_user_embeddings(const ParameterSet& params,
                                               const std::map<std::string, UserHistory>& users,
                                               float slope) {
  std::vector<std::pair<std::string, const UserHistory*>> items;
  for (const auto& [id, h] : users) items.emplace_back(id, &h);
  std::vector<serving::Entry> entries(items.size());
  parallel_for(items.size(), [&](std::size_t i) {
    const Tensor ue = embed_user(*items[i].second, params, slope);
    double norm = 0.0;
    for (float v : ue.values()) norm += static_cast<double>(v) * v;
    if (!(norm > 0.0) || !ue.all_finite()) {
      throw DegenerateInputError("user embedding for '" + items[i].first + "' has zero norm");
    }
    entries[i] = {items[i].first, std::vector<float>(ue.values().begin(), ue.values().end())};
  });
  return serving::EmbeddingStore::build(serving::StoreKind::user, std::move(entries), kEmbeddingDim);
}

}  // namespace embrec::user
