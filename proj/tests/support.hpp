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

// Fixture builders and numeric helpers shared by the unit tests and the
// acceptance suite.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "reactpref/core/dataset.hpp"
#include "reactpref/core/judge.hpp"
#include "reactpref/core/metrics.hpp"
#include "reactpref/core/preference.hpp"
#include "reactpref/core/rng.hpp"
#include "reactpref/core/seq_model.hpp"

namespace reactpref::testing {

inline VocabSpec small_vocab() { return VocabSpec::standard(5, 5, 3, 6, 8); }

inline std::vector<TokenId> random_tokens(const TokenRange& range, int min_len, int max_len,
                                          Rng& rng) {
  const int n = min_len + static_cast<int>(rng.index(static_cast<std::size_t>(max_len - min_len + 1)));
  std::vector<TokenId> out;
  for (int i = 0; i < n; ++i)
    out.push_back(range.at(static_cast<int>(rng.index(static_cast<std::size_t>(range.size)))));
  return out;
}

inline Condition random_condition(const VocabSpec& vocab, Rng& rng, Mode mode) {
  return make_condition(vocab, random_tokens(vocab.text, 1, 4, rng),
                        random_tokens(vocab.audio, 1, 4, rng),
                        vocab.emotion.at(static_cast<int>(rng.index(static_cast<std::size_t>(vocab.emotion.size)))),
                        mode);
}

inline MotionSequence random_motion(const VocabSpec& vocab, Rng& rng, std::string id) {
  return {random_tokens(vocab.motion, 1, std::min(4, vocab.max_target_length), rng), std::move(id)};
}

/// Gaussian weights with a non-zero bias, so every parameter block matters.
inline ModelParams random_model(const VocabSpec& vocab, int dim, double scale, Rng& rng) {
  ModelParams p = init_model(vocab, dim, scale, rng);
  for (int i = 0; i < p.output_bias().size(); ++i) p.output_bias()[i] = scale * rng.normal();
  return p;
}

/// A group with 1..3 candidates per tier and distinct motion ids.
inline Group random_group(const VocabSpec& vocab, Rng& rng, const std::string& id, Mode mode) {
  Group g;
  g.group_id = id;
  g.condition = random_condition(vocab, rng, mode);
  int next = 0;
  for (Tier t : kTiers) {
    const int n = 1 + static_cast<int>(rng.index(3));
    for (int i = 0; i < n; ++i)
      g.candidates.push_back({random_motion(vocab, rng, id + "-m" + std::to_string(next++)), t});
  }
  return g;
}

inline std::vector<WeightedGroup> random_weighted_groups(const VocabSpec& vocab, Rng& rng, int n) {
  std::vector<WeightedGroup> out;
  for (int i = 0; i < n; ++i) {
    const Mode mode = evaluation_modes()[rng.index(6)];
    out.push_back({random_group(vocab, rng, "g" + std::to_string(i), mode), 0.2 + 1.3 * rng.uniform()});
  }
  return out;
}

inline std::vector<ModedGroup> random_moded_groups(const VocabSpec& vocab, Rng& rng, int n) {
  std::vector<ModedGroup> out;
  for (int i = 0; i < n; ++i)
    out.push_back({random_group(vocab, rng, "j" + std::to_string(i), Mode::all()),
                   evaluation_modes()[rng.index(6)]});
  return out;
}

/// Judge with every weight randomized (the stock initializer leaves the
/// pooling queries at zero) and a small random bank.
inline JudgeParams random_judge(const VocabSpec& vocab, Rng& rng, int bank_rows = 5) {
  JudgeParams p = init_judge(vocab, JudgeDims{4, 3, 0.5, 0.5}, rng);
  for (double& v : p.weights.values()) v = 0.5 * rng.normal();
  p.weights.tau() = 0.4 + 0.3 * rng.uniform();
  p.bank.resize(bank_rows, 3);
  for (int r = 0; r < bank_rows; ++r) {
    Eigen::VectorXd v(3);
    for (int c = 0; c < 3; ++c) v[c] = rng.normal();
    p.bank.row(r) = v.normalized().transpose();
  }
  return p;
}

/// Same active content; inactive modalities get fresh random content.
inline Condition mutate_inactive(const Condition& cond, Mode keep, const VocabSpec& vocab, Rng& rng) {
  const bool t = keep.contains(Modality::Text), a = keep.contains(Modality::Audio),
             e = keep.contains(Modality::Emotion);
  std::vector<TokenId> text = t ? cond.text_tokens : random_tokens(vocab.text, 1, 6, rng);
  std::vector<TokenId> audio = a ? cond.audio_tokens : random_tokens(vocab.audio, 1, 6, rng);
  const TokenId emotion =
      e ? cond.emotion
        : vocab.emotion.at(static_cast<int>(rng.index(static_cast<std::size_t>(vocab.emotion.size))));
  return make_condition(vocab, std::move(text), std::move(audio), emotion, cond.mode);
}

/// Central differences with step 1e-5 over every entry of `values`.
inline std::vector<double> numeric_gradient(std::span<double> values,
                                            const std::function<double()>& f, double h = 1e-5) {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double keep = values[i];
    values[i] = keep + h;
    const double up = f();
    values[i] = keep - h;
    const double down = f();
    values[i] = keep;
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

/// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor). The floor keeps entries that
/// are zero up to rounding from dominating.
inline double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                                 double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

/// Random pooled scores on a coarse grid (frequent ties) with at least one
/// candidate of every origin and at most `max_size` candidates.
inline GroupScores random_group_scores(Rng& rng, const std::string& id, int max_size) {
  GroupScores g;
  g.group_id = id;
  std::vector<Origin> origins = {Origin::Gold, Origin::Silver, Origin::Negative, Origin::Generated};
  const int extra = static_cast<int>(rng.index(static_cast<std::size_t>(max_size - 3)));
  for (int i = 0; i < extra; ++i) origins.push_back(static_cast<Origin>(rng.index(4)));
  int n = 0;
  for (Origin o : origins) {
    // Ids are shuffled relative to origins so the tie-break carries no tier signal.
    const std::string cid = "c" + std::to_string(rng.index(1000)) + "-" + std::to_string(n++);
    g.candidates.push_back({cid, o, 0.5 * static_cast<double>(rng.index(5))});
  }
  return g;
}

/// Random mean and a well-conditioned covariance B B^T / d + 0.1 I.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> random_gaussian(int d, Rng& rng) {
  Eigen::VectorXd mu(d);
  Eigen::MatrixXd b(d, d);
  for (int i = 0; i < d; ++i) {
    mu[i] = rng.normal();
    for (int j = 0; j < d; ++j) b(i, j) = rng.normal();
  }
  Eigen::MatrixXd cov = b * b.transpose() / d + 0.1 * Eigen::MatrixXd::Identity(d, d);
  return {mu, cov};
}

/// Judge scores of every annotated candidate of each group under `mode`.
inline std::vector<GroupScores> judge_group_scores(const JudgeParams& judge,
                                                   std::span<const Group> groups, Mode mode) {
  std::vector<GroupScores> out;
  for (const auto& g : groups) {
    GroupScores gs;
    gs.group_id = g.group_id;
    for (const auto& c : g.candidates)
      gs.candidates.push_back({c.motion.motion_id, origin_of(c.tier),
                               judge_score(judge, g.condition, c.motion, mode)});
    out.push_back(std::move(gs));
  }
  return out;
}

}  // namespace reactpref::testing
