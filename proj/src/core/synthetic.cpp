/*
 * Copyright 2026 The reactpref Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "reactpref/core/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <Eigen/QR>

namespace reactpref {

namespace {

Json range_json(const LengthRange& r) { return Json{{"min", r.min}, {"max", r.max}}; }

LengthRange range_from(const Json& j, const LengthRange& fallback, const std::string& path) {
  expect_object(j, path);
  reject_unknown_keys(j, {"min", "max"}, path);
  return {value_or<int>(j, "min", fallback.min, path), value_or<int>(j, "max", fallback.max, path)};
}

}  // namespace

void WorldConfig::validate() const {
  require(n_concepts >= 2, ErrorKind::Config, "synth.n_concepts must be >= 2");
  for (int n : groups_per_split)
    require(n >= 0, ErrorKind::Config, "synth.groups_per_split entries must be >= 0");
  for (int n : candidates_per_tier)
    require(n >= 1, ErrorKind::Config, "synth.candidates_per_tier entries must be >= 1");
  require(motions_per_anchor >= 1, ErrorKind::Config, "synth.motions_per_anchor must be >= 1");
  for (const LengthRange* r : {&motion_length, &text_length, &audio_length})
    require(r->min >= 1 && r->max >= r->min, ErrorKind::Config,
            "synth length ranges need 1 <= min <= max");
  require(text_vocab >= n_concepts && audio_vocab >= n_concepts && motion_vocab >= n_concepts,
          ErrorKind::Config, "every concept needs at least one text, audio and motion codeword");
  require(emotion_vocab >= 1, ErrorKind::Config, "synth.emotion_vocab must be >= 1");
  require(feature_dim >= n_concepts, ErrorKind::Config,
          "synth.feature_dim must be >= n_concepts (concepts are orthonormal)");
  require(noise >= 0.0 && noise < 1.0, ErrorKind::Config, "synth.noise must lie in [0, 1)");
  require(token_jitter >= 0.0 && codebook_spread >= 0.0, ErrorKind::Config,
          "synth.token_jitter and synth.codebook_spread must be >= 0");
  require(silver_blend > 0.0 && silver_blend < 1.0, ErrorKind::Config,
          "synth.silver_blend must lie in (0, 1)");
  require(dominant_negative_fraction >= 0.0 && dominant_negative_fraction <= 1.0,
          ErrorKind::Config, "synth.dominant_negative_fraction must lie in [0, 1]");
}

Json WorldConfig::to_json() const {
  return Json{{"seed", seed},
              {"n_concepts", n_concepts},
              {"groups_per_split",
               {{"train", groups_per_split[0]}, {"val", groups_per_split[1]}, {"test", groups_per_split[2]}}},
              {"candidates_per_tier",
               {{"gold", candidates_per_tier[0]},
                {"silver", candidates_per_tier[1]},
                {"negative", candidates_per_tier[2]}}},
              {"motions_per_anchor", motions_per_anchor},
              {"motion_length", range_json(motion_length)},
              {"text_length", range_json(text_length)},
              {"audio_length", range_json(audio_length)},
              {"text_vocab", text_vocab},
              {"audio_vocab", audio_vocab},
              {"emotion_vocab", emotion_vocab},
              {"motion_vocab", motion_vocab},
              {"feature_dim", feature_dim},
              {"noise", noise},
              {"token_jitter", token_jitter},
              {"codebook_spread", codebook_spread},
              {"silver_blend", silver_blend},
              {"dominant_negative_fraction", dominant_negative_fraction}};
}

WorldConfig WorldConfig::from_json(const Json& j) {
  const std::string path = "synth";
  expect_object(j, path);
  reject_unknown_keys(j,
                      {"seed", "n_concepts", "groups_per_split", "candidates_per_tier",
                       "motions_per_anchor", "motion_length", "text_length", "audio_length",
                       "text_vocab", "audio_vocab", "emotion_vocab", "motion_vocab", "feature_dim",
                       "noise", "token_jitter", "codebook_spread", "silver_blend",
                       "dominant_negative_fraction"},
                      path);
  WorldConfig c;
  c.seed = value_or<std::uint64_t>(j, "seed", c.seed, path);
  c.n_concepts = value_or<int>(j, "n_concepts", c.n_concepts, path);
  if (j.contains("groups_per_split")) {
    const Json& g = j.at("groups_per_split");
    const std::string p = path + ".groups_per_split";
    expect_object(g, p);
    reject_unknown_keys(g, {"train", "val", "test"}, p);
    c.groups_per_split = {value_or<int>(g, "train", c.groups_per_split[0], p),
                          value_or<int>(g, "val", c.groups_per_split[1], p),
                          value_or<int>(g, "test", c.groups_per_split[2], p)};
  }
  if (j.contains("candidates_per_tier")) {
    const Json& g = j.at("candidates_per_tier");
    const std::string p = path + ".candidates_per_tier";
    expect_object(g, p);
    reject_unknown_keys(g, {"gold", "silver", "negative"}, p);
    c.candidates_per_tier = {value_or<int>(g, "gold", c.candidates_per_tier[0], p),
                             value_or<int>(g, "silver", c.candidates_per_tier[1], p),
                             value_or<int>(g, "negative", c.candidates_per_tier[2], p)};
  }
  c.motions_per_anchor = value_or<int>(j, "motions_per_anchor", c.motions_per_anchor, path);
  if (j.contains("motion_length"))
    c.motion_length = range_from(j.at("motion_length"), c.motion_length, path + ".motion_length");
  if (j.contains("text_length"))
    c.text_length = range_from(j.at("text_length"), c.text_length, path + ".text_length");
  if (j.contains("audio_length"))
    c.audio_length = range_from(j.at("audio_length"), c.audio_length, path + ".audio_length");
  c.text_vocab = value_or<int>(j, "text_vocab", c.text_vocab, path);
  c.audio_vocab = value_or<int>(j, "audio_vocab", c.audio_vocab, path);
  c.emotion_vocab = value_or<int>(j, "emotion_vocab", c.emotion_vocab, path);
  c.motion_vocab = value_or<int>(j, "motion_vocab", c.motion_vocab, path);
  c.feature_dim = value_or<int>(j, "feature_dim", c.feature_dim, path);
  c.noise = value_or<double>(j, "noise", c.noise, path);
  c.token_jitter = value_or<double>(j, "token_jitter", c.token_jitter, path);
  c.codebook_spread = value_or<double>(j, "codebook_spread", c.codebook_spread, path);
  c.silver_blend = value_or<double>(j, "silver_blend", c.silver_blend, path);
  c.dominant_negative_fraction =
      value_or<double>(j, "dominant_negative_fraction", c.dominant_negative_fraction, path);
  return c;
}

Eigen::VectorXd PlantedWorld::feature_of(const MotionSequence& motion) const {
  require(!motion.tokens.empty(), ErrorKind::InvalidArgument, "empty motion has no feature");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(config.feature_dim);
  for (TokenId t : motion.tokens) {
    require(vocab.motion.contains(t), ErrorKind::InvalidArgument, "token outside the motion range");
    f += motion_codebook[static_cast<std::size_t>(vocab.motion.offset(t))];
  }
  return f / static_cast<double>(motion.tokens.size());
}

double PlantedWorld::similarity(const std::string& group_id, const MotionSequence& motion) const {
  const auto it = group_concepts.find(group_id);
  require(it != group_concepts.end(), ErrorKind::InvalidArgument,
          "group '" + group_id + "' is not part of this world");
  return concepts[static_cast<std::size_t>(it->second)].dot(feature_of(motion));
}

namespace {

Json vec_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from(const Json& j, int dim, const char* what) {
  require(j.is_array() && static_cast<int>(j.size()) == dim, ErrorKind::Parse,
          std::string("world sidecar: bad ") + what + " vector");
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

std::string PlantedWorld::sidecar_json() const {
  Json concepts_j = Json::array();
  for (const auto& c : concepts) concepts_j.push_back(vec_json(c));
  Json codebook_j = Json::array();
  for (const auto& c : motion_codebook) codebook_j.push_back(vec_json(c));
  Json features_j = Json::object();
  for (const auto& [id, f] : features) features_j[id] = vec_json(f);
  Json groups_j = Json::object();
  for (const auto& [id, k] : group_concepts) groups_j[id] = k;
  const Json doc{{"config", config.to_json()},
                 {"concepts", concepts_j},
                 {"motion_codebook", codebook_j},
                 {"group_concepts", groups_j},
                 {"features", features_j}};
  return doc.dump(1) + "\n";
}

PlantedWorld PlantedWorld::from_sidecar(std::string_view json_text, Dataset dataset) {
  const Json doc = parse_json(json_text, ErrorKind::Parse, "world sidecar");
  expect_object(doc, "world");
  reject_unknown_keys(doc, {"config", "concepts", "motion_codebook", "group_concepts", "features"},
                      "world");
  PlantedWorld w;
  try {
    w.config = WorldConfig::from_json(doc.at("config"));
    const int d = w.config.feature_dim;
    for (const auto& c : doc.at("concepts")) w.concepts.push_back(vec_from(c, d, "concept"));
    for (const auto& c : doc.at("motion_codebook"))
      w.motion_codebook.push_back(vec_from(c, d, "codeword"));
    for (const auto& [id, k] : doc.at("group_concepts").items()) w.group_concepts[id] = k.get<int>();
    for (const auto& [id, f] : doc.at("features").items()) w.features[id] = vec_from(f, d, "feature");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("world sidecar: ") + e.what());
  }
  w.vocab = dataset.vocab;
  require(static_cast<int>(w.motion_codebook.size()) == w.vocab.motion.size, ErrorKind::Parse,
          "world sidecar codebook does not match the motion vocabulary");
  require(static_cast<int>(w.concepts.size()) == w.config.n_concepts, ErrorKind::Parse,
          "world sidecar concept count does not match its config");
  w.dataset = std::move(dataset);
  return w;
}

namespace {

Eigen::VectorXd gaussian(int d, Rng& rng) {
  Eigen::VectorXd g(d);
  for (int i = 0; i < d; ++i) g[i] = rng.normal();
  return g;
}

/// Perturbation with expected norm close to `scale`.
Eigen::VectorXd perturb(const Eigen::VectorXd& v, double scale, Rng& rng) {
  const int d = static_cast<int>(v.size());
  Eigen::VectorXd p = v + (scale / std::sqrt(static_cast<double>(d))) * gaussian(d, rng);
  return p.normalized();
}

std::vector<Eigen::VectorXd> concept_codebook(const std::vector<Eigen::VectorXd>& concepts,
                                              int size, double spread, Rng& rng) {
  std::vector<Eigen::VectorXd> book;
  for (int j = 0; j < size; ++j)
    book.push_back(perturb(concepts[static_cast<std::size_t>(j) % concepts.size()], spread, rng));
  return book;
}

int nearest(const std::vector<Eigen::VectorXd>& book, const Eigen::VectorXd& point) {
  int best = 0;
  double best_dot = book[0].dot(point);
  for (std::size_t j = 1; j < book.size(); ++j) {
    const double d = book[j].dot(point);
    if (d > best_dot) {
      best_dot = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

std::vector<TokenId> snap(const Eigen::VectorXd& latent, const std::vector<Eigen::VectorXd>& book,
                          const TokenRange& range, LengthRange len, double jitter, Rng& rng) {
  const int n = len.min + static_cast<int>(rng.index(static_cast<std::size_t>(len.max - len.min + 1)));
  std::vector<TokenId> out;
  for (int i = 0; i < n; ++i) out.push_back(range.at(nearest(book, perturb(latent, jitter, rng))));
  return out;
}

std::string motion_id(int anchor, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "m%02d-%03d", anchor, index);
  return buf;
}

std::string group_id(Split s, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%04d", split_name(s), index);
  return buf;
}

/// Anchor indices per tier for concept k: 0..K-1 are pure concepts; K+2k and
/// K+2k+1 lean concept k toward its next and previous neighbour.
std::array<std::vector<int>, 3> tier_anchors(int k, int n_concepts) {
  std::array<std::vector<int>, 3> out;
  out[0] = {k};
  out[1] = {n_concepts + 2 * k, n_concepts + 2 * k + 1};
  for (int a = 0; a < 3 * n_concepts; ++a)
    if (a != k && a != out[1][0] && a != out[1][1]) out[2].push_back(a);
  return out;
}

template <class T>
void shuffle(std::vector<T>& xs, Rng& rng) {
  for (std::size_t i = xs.size(); i > 1; --i) std::swap(xs[i - 1], xs[rng.index(i)]);
}

}  // namespace

PlantedWorld generate_world(const WorldConfig& cfg) {
  cfg.validate();
  const int K = cfg.n_concepts;
  const int d = cfg.feature_dim;
  const Rng root(cfg.seed);

  PlantedWorld w;
  w.config = cfg;
  w.vocab = VocabSpec::standard(cfg.text_vocab, cfg.audio_vocab, cfg.emotion_vocab,
                                cfg.motion_vocab, 2 * cfg.motion_length.max);

  // Feasibility: every tier must offer enough distinct motions.
  for (std::size_t t = 0; t < 3; ++t) {
    const std::size_t available = tier_anchors(0, K)[t].size() *
                                  static_cast<std::size_t>(cfg.motions_per_anchor);
    require(static_cast<std::size_t>(cfg.candidates_per_tier[t]) <= available, ErrorKind::Config,
            std::string("synth: ") + std::to_string(cfg.candidates_per_tier[t]) + " " +
                tier_name(static_cast<Tier>(t)) + " candidates requested but only " +
                std::to_string(available) + " distinct motions exist per group");
  }

  Rng concept_rng = root.split(1);
  Eigen::MatrixXd raw(d, K);
  for (int c = 0; c < K; ++c) raw.col(c) = gaussian(d, concept_rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(raw).householderQ() *
                            Eigen::MatrixXd::Identity(d, K);
  for (int c = 0; c < K; ++c) w.concepts.push_back(q.col(c));

  Rng book_rng = root.split(2);
  const auto text_book = concept_codebook(w.concepts, cfg.text_vocab, cfg.codebook_spread, book_rng);
  const auto audio_book = concept_codebook(w.concepts, cfg.audio_vocab, cfg.codebook_spread, book_rng);
  w.motion_codebook = concept_codebook(w.concepts, cfg.motion_vocab, cfg.codebook_spread, book_rng);

  std::vector<Eigen::VectorXd> anchors = w.concepts;
  for (int j = 0; j < K; ++j) {
    const auto& next = w.concepts[static_cast<std::size_t>((j + 1) % K)];
    const auto& prev = w.concepts[static_cast<std::size_t>((j + K - 1) % K)];
    anchors.push_back((w.concepts[j] + cfg.silver_blend * next).normalized());
    anchors.push_back((w.concepts[j] + cfg.silver_blend * prev).normalized());
  }

  Rng pool_rng = root.split(3);
  std::vector<std::vector<MotionSequence>> pools(anchors.size());
  for (std::size_t a = 0; a < anchors.size(); ++a)
    for (int i = 0; i < cfg.motions_per_anchor; ++i) {
      const Eigen::VectorXd latent = perturb(anchors[a], cfg.noise, pool_rng);
      MotionSequence m{snap(latent, w.motion_codebook, w.vocab.motion, cfg.motion_length,
                            cfg.token_jitter, pool_rng),
                       motion_id(static_cast<int>(a), i)};
      w.features[m.motion_id] = w.feature_of(m);
      pools[a].push_back(std::move(m));
    }

  std::set<std::vector<TokenId>> seen_conditions;
  w.dataset.vocab = w.vocab;
  for (Split s : {Split::Train, Split::Val, Split::Test}) {
    const int n_groups = cfg.groups_per_split[static_cast<std::size_t>(s)];
    const Rng split_rng = root.split(100 + static_cast<std::uint64_t>(s));
    for (int i = 0; i < n_groups; ++i) {
      Rng rng = split_rng.split(static_cast<std::uint64_t>(i));
      const int k = static_cast<int>(rng.index(static_cast<std::size_t>(K)));
      Group g;
      g.group_id = group_id(s, i);
      bool unique = false;
      for (int attempt = 0; attempt < 100 && !unique; ++attempt) {
        const Eigen::VectorXd latent = perturb(w.concepts[k], cfg.noise, rng);
        g.condition = make_condition(
            w.vocab, snap(latent, text_book, w.vocab.text, cfg.text_length, cfg.token_jitter, rng),
            snap(latent, audio_book, w.vocab.audio, cfg.audio_length, cfg.token_jitter, rng),
            w.vocab.emotion.at(k % cfg.emotion_vocab), Mode::all());
        unique = seen_conditions.insert(serialize_condition(g.condition, w.vocab)).second;
      }
      require(unique, ErrorKind::Config,
              "synth: could not draw a distinct condition for " + g.group_id +
                  "; widen the length ranges or vocabularies");

      const auto tiers = tier_anchors(k, K);
      for (std::size_t t = 0; t < 3; ++t) {
        std::vector<const MotionSequence*> pool;
        for (int a : tiers[t])
          for (const auto& m : pools[static_cast<std::size_t>(a)]) pool.push_back(&m);
        const auto picks = rng.sample_without_replacement(
            pool.size(), static_cast<std::size_t>(cfg.candidates_per_tier[t]));
        for (std::size_t p : picks) g.candidates.push_back({*pool[p], static_cast<Tier>(t)});
      }
      shuffle(g.candidates, rng);
      w.group_concepts[g.group_id] = k;
      w.dataset.split(s).push_back(std::move(g));
    }
  }

  if (cfg.dominant_negative_fraction > 0.0) {
    auto& train = w.dataset.split(Split::Train);
    Rng dom_rng = root.split(4);
    const MotionSequence dominant{
        snap(perturb(anchors[0], cfg.noise, dom_rng), w.motion_codebook, w.vocab.motion,
             cfg.motion_length, cfg.token_jitter, dom_rng),
        kDominantMotionId};
    w.features[dominant.motion_id] = w.feature_of(dominant);
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < train.size(); ++i)
      if (w.group_concepts.at(train[i].group_id) != 0) eligible.push_back(i);
    const auto wanted = static_cast<std::size_t>(
        std::llround(cfg.dominant_negative_fraction * static_cast<double>(train.size())));
    require(wanted <= eligible.size(), ErrorKind::Config,
            "synth: not enough training groups can hold the dominant negative motion");
    shuffle(eligible, dom_rng);
    for (std::size_t n = 0; n < wanted; ++n) {
      auto& cands = train[eligible[n]].candidates;
      // Replace the last Negative so tier counts stay as configured.
      for (auto it = cands.rbegin(); it != cands.rend(); ++it)
        if (it->tier == Tier::Negative) {
          it->motion = dominant;
          break;
        }
    }
  }
  validate_dataset(w.dataset);
  return w;
}

std::vector<const Candidate*> oracle_rank(const PlantedWorld& world, const Group& group) {
  std::vector<std::pair<double, const Candidate*>> scored;
  for (const auto& c : group.candidates)
    scored.emplace_back(world.similarity(group.group_id, c.motion), &c);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second->motion.motion_id < b.second->motion.motion_id;
  });
  std::vector<const Candidate*> out;
  for (const auto& s : scored) out.push_back(s.second);
  return out;
}

std::vector<double> PlantedScorer::score(const Group& group, std::span<const MotionSequence> motions,
                                         Mode) const {
  std::vector<double> out;
  out.reserve(motions.size());
  for (const auto& m : motions) out.push_back(world_.similarity(group.group_id, m));
  return out;
}

}  // namespace reactpref
