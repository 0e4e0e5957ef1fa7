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

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reactpref/core/dataset.hpp"
#include "reactpref/core/optimizer.hpp"
#include "reactpref/core/rng.hpp"
#include "reactpref/core/seq_model.hpp"

namespace reactpref {

enum class Branch : std::uint8_t { Text = 0, Audio = 1, Emotion = 2, Motion = 3 };

inline constexpr std::array<Branch, 4> kBranches = {Branch::Text, Branch::Audio,
                                                    Branch::Emotion, Branch::Motion};

inline Branch branch_of(Modality m) { return static_cast<Branch>(static_cast<int>(m)); }

/// Flat judge weights. Each branch owns an embedding table with one extra
/// trailing "null" row (pad / unknown-emotion), an attention-pooling query and
/// a d -> d_o projection. The fusion stage has three type embeddings, one
/// mode embedding per modality subset (indexed by mode bits, row 0 unused), a
/// pooling query and its own projection. The last scalar is the log-scale
/// temperature tau (alpha = exp(tau)).
template <class Tag>
class JudgeBuffer {
 public:
  JudgeBuffer() = default;
  JudgeBuffer(VocabSpec vocab, int dim, int out_dim)
      : vocab_(std::move(vocab)), dim_(dim), out_dim_(out_dim) {
    std::size_t off = 0;
    for (Branch b : kBranches) {
      embed_off_[idx(b)] = off;
      off += static_cast<std::size_t>(table_rows(b)) * dim_;
    }
    query_off_ = off;
    off += 4 * static_cast<std::size_t>(dim_);
    proj_w_off_ = off;
    off += 4 * static_cast<std::size_t>(out_dim_) * dim_;
    proj_b_off_ = off;
    off += 4 * static_cast<std::size_t>(out_dim_);
    type_off_ = off;
    off += 3 * static_cast<std::size_t>(dim_);
    mode_off_ = off;
    off += 8 * static_cast<std::size_t>(dim_);
    fusion_query_off_ = off;
    off += dim_;
    fusion_w_off_ = off;
    off += static_cast<std::size_t>(out_dim_) * dim_;
    fusion_b_off_ = off;
    off += out_dim_;
    tau_off_ = off;
    off += 1;
    values_.assign(off, 0.0);
  }

  const VocabSpec& vocab() const { return vocab_; }
  int dim() const { return dim_; }
  int out_dim() const { return out_dim_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  int table_rows(Branch b) const { return range(b).size + 1; }
  const TokenRange& range(Branch b) const {
    switch (b) {
      case Branch::Text: return vocab_.text;
      case Branch::Audio: return vocab_.audio;
      case Branch::Emotion: return vocab_.emotion;
      case Branch::Motion: break;
    }
    return vocab_.motion;
  }

  MatrixMap embed(Branch b) { return {ptr(embed_off_[idx(b)]), table_rows(b), dim_}; }
  ConstMatrixMap embed(Branch b) const { return {ptr(embed_off_[idx(b)]), table_rows(b), dim_}; }
  VectorMap pool_query(Branch b) { return {ptr(query_off_ + idx(b) * dim_), dim_}; }
  ConstVectorMap pool_query(Branch b) const { return {ptr(query_off_ + idx(b) * dim_), dim_}; }
  MatrixMap proj_weight(Branch b) {
    return {ptr(proj_w_off_ + idx(b) * out_dim_ * dim_), out_dim_, dim_};
  }
  ConstMatrixMap proj_weight(Branch b) const {
    return {ptr(proj_w_off_ + idx(b) * out_dim_ * dim_), out_dim_, dim_};
  }
  VectorMap proj_bias(Branch b) { return {ptr(proj_b_off_ + idx(b) * out_dim_), out_dim_}; }
  ConstVectorMap proj_bias(Branch b) const {
    return {ptr(proj_b_off_ + idx(b) * out_dim_), out_dim_};
  }
  VectorMap type_embed(Modality m) { return {ptr(type_off_ + idx(m) * dim_), dim_}; }
  ConstVectorMap type_embed(Modality m) const { return {ptr(type_off_ + idx(m) * dim_), dim_}; }
  VectorMap mode_embed(Mode m) { return {ptr(mode_off_ + m.bits() * std::size_t(dim_)), dim_}; }
  ConstVectorMap mode_embed(Mode m) const {
    return {ptr(mode_off_ + m.bits() * std::size_t(dim_)), dim_};
  }
  VectorMap fusion_query() { return {ptr(fusion_query_off_), dim_}; }
  ConstVectorMap fusion_query() const { return {ptr(fusion_query_off_), dim_}; }
  MatrixMap fusion_weight() { return {ptr(fusion_w_off_), out_dim_, dim_}; }
  ConstMatrixMap fusion_weight() const { return {ptr(fusion_w_off_), out_dim_, dim_}; }
  VectorMap fusion_bias() { return {ptr(fusion_b_off_), out_dim_}; }
  ConstVectorMap fusion_bias() const { return {ptr(fusion_b_off_), out_dim_}; }
  double& tau() { return values_[tau_off_]; }
  double tau() const { return values_[tau_off_]; }

  /// Table row for a token of branch `b`; out-of-range ids are rejected,
  /// pad / unknown-emotion map to the null row.
  int row_of(Branch b, TokenId id) const;

  friend bool operator==(const JudgeBuffer&, const JudgeBuffer&) = default;

 private:
  template <class E>
  static std::size_t idx(E e) {
    return static_cast<std::size_t>(e);
  }
  double* ptr(std::size_t off) { return values_.data() + off; }
  const double* ptr(std::size_t off) const { return values_.data() + off; }

  VocabSpec vocab_;
  int dim_ = 0;
  int out_dim_ = 0;
  std::array<std::size_t, 4> embed_off_{};
  std::size_t query_off_ = 0, proj_w_off_ = 0, proj_b_off_ = 0, type_off_ = 0, mode_off_ = 0,
              fusion_query_off_ = 0, fusion_w_off_ = 0, fusion_b_off_ = 0, tau_off_ = 0;
  std::vector<double> values_;
};

struct JudgeWeightsTag;
struct JudgeGradientTag;
using JudgeWeights = JudgeBuffer<JudgeWeightsTag>;
using JudgeGradient = JudgeBuffer<JudgeGradientTag>;

/// Judge weights plus the motion bank: a fixed-size list of unit motion
/// embeddings used as extra negatives (treated as constants by the loss).
struct JudgeParams {
  JudgeWeights weights;
  RowMatrix bank;  // bank_size x out_dim

  double alpha() const;
  friend bool operator==(const JudgeParams&, const JudgeParams&) = default;
};

inline JudgeGradient zero_gradient_like(const JudgeWeights& w) {
  return JudgeGradient(w.vocab(), w.dim(), w.out_dim());
}

struct JudgeDims {
  int dim = 32;
  int out_dim = 16;
  double init_scale = 0.1;
  double temperature = 0.07;  // alpha starts at 1 / temperature
};

JudgeParams init_judge(const VocabSpec& vocab, const JudgeDims& dims, Rng& rng);

/// Cached forward pass of one branch, reused by the backward pass.
struct BranchEncoding {
  bool null = true;
  std::vector<int> rows;   // table rows of valid positions
  RowMatrix hidden;        // valid positions x d
  Eigen::VectorXd attn;    // attention weights over valid positions
  Eigen::VectorXd pooled;  // attention-pooled hidden state (d)
  Eigen::VectorXd pre;     // projected, before normalization (d_o)
  double norm = 0.0;
  Eigen::VectorXd z;       // unit score-space vector, zero when null
  Eigen::VectorXd summary; // masked mean of hidden states (d), zero when null
};

BranchEncoding encode_modality(const JudgeWeights& w, Branch branch,
                               std::span<const TokenId> tokens,
                               std::span<const std::uint8_t> mask);

/// Replaces every modality outside `mode` with its null input: pad tokens
/// with an all-false mask for text/audio, the unknown sentinel for emotion.
Condition strict_l2_nullify(const Condition& cond, Mode mode, const VocabSpec& vocab);

struct FusionEncoding {
  Mode mode;
  std::vector<Modality> active;
  RowMatrix tokens;        // active x d: summary + type + mode embedding
  Eigen::VectorXd attn;
  Eigen::VectorXd pooled;
  Eigen::VectorXd pre;
  double norm = 0.0;
  Eigen::VectorXd z;
};

FusionEncoding fuse(const JudgeWeights& w, const std::array<Eigen::VectorXd, 3>& summaries,
                    Mode mode);

struct ConditionEncoding {
  Mode mode;
  std::array<BranchEncoding, 3> branches;
  FusionEncoding fused;
};

/// Encodes a condition that has already been nullified to its mode.
ConditionEncoding encode_condition(const JudgeWeights& w, const Condition& cond);

BranchEncoding encode_motion(const JudgeWeights& w, const MotionSequence& motion);

/// exp(tau) * <z, z_m>; both inputs must be unit vectors within 1e-6.
double compatibility(const Eigen::VectorXd& z, const Eigen::VectorXd& z_m, double tau);

struct JudgeScores {
  double fused = 0.0;
  std::array<std::optional<double>, 3> per_modality;
};

/// Scores after Strict-L2 nullification to `mode`.
JudgeScores judge_scores(const JudgeParams& params, const Condition& cond,
                         const MotionSequence& motion, Mode mode);
double judge_score(const JudgeParams& params, const Condition& cond,
                   const MotionSequence& motion, Mode mode);

/// Which condition embedding an InfoNCE term is applied to.
enum class ConditionView : std::uint8_t { Text = 0, Audio = 1, Emotion = 2, Fused = 3 };

struct TierSet {
  bool gold = true;
  bool silver = false;
  bool negative = false;
  bool contains(Tier t) const {
    return t == Tier::Gold ? gold : (t == Tier::Silver ? silver : negative);
  }
};

/// Group-wise InfoNCE with the params' motion bank as extra negatives.
double infonce_group_loss(const JudgeParams& params, const Group& group, TierSet positives,
                          Mode mode, double beta, ConditionView view = ConditionView::Fused);

struct JudgeLossConfig {
  double lambda_fused = 1.0;
  double lambda_text = 0.5;
  double lambda_audio = 0.5;
  double lambda_emotion = 0.2;
  double beta = 1.0;
  TierSet positives;
};

struct ModedGroup {
  Group group;
  Mode mode;
};

/// lambda_f L(z_f) + sum over active k of lambda_k L(z_k), averaged over the
/// batch. Fills `grad` (bank held constant) when non-null.
double judge_total_loss(const JudgeParams& params, std::span<const ModedGroup> batch,
                        const JudgeLossConfig& cfg, JudgeGradient* grad = nullptr);

struct JudgeTrainConfig {
  JudgeDims dims;
  JudgeLossConfig loss;
  int bank_size = 4096;
  int samples_per_tier = 2;
  OptimizerConfig optimizer{5e-3, 0.9, 0.999, 1e-8, 0.01, 100, 2000, 16, 1};

  void validate() const;
};

struct JudgeLogEntry {
  std::int64_t step = 0;
  double loss = 0.0;
  Mode mode;
  double alpha = 0.0;
  double grad_norm = 0.0;
};

std::string to_jsonl(const std::vector<JudgeLogEntry>& log);

struct JudgeTrainingState {
  JudgeParams params;
  AdamW optimizer;
  std::int64_t step = 0;

  static JudgeTrainingState fresh(JudgeParams params);
};

struct JudgeTrainingRun {
  JudgeTrainingState state;
  std::vector<JudgeLogEntry> log;
};

/// Each step samples one of the six evaluation modes, refreshes the bank from
/// uniformly drawn training motions, and takes one optimizer step.
JudgeTrainingRun train_judge(JudgeTrainingState state, const Dataset& dataset,
                             const JudgeTrainConfig& cfg, std::uint64_t seed,
                             std::optional<std::int64_t> stop_at = std::nullopt);

/// Re-embeds `bank_size` uniformly drawn motions into params.bank.
void refresh_bank(JudgeParams& params, std::span<const MotionSequence> pool, int bank_size,
                  Rng& rng);

}  // namespace reactpref
