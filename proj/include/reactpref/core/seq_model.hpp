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

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "reactpref/core/dataset.hpp"
#include "reactpref/core/rng.hpp"

namespace reactpref {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

/// Flat storage for the toy conditional generator.
///
/// Layout, in order:
///   condition_embed  [vocab_total x dim]      one row per unified-vocab id
///   prev_embed       [(motion+1) x dim]       motion offsets, then begin-motion
///   output_weight    [(motion+1) x 2*dim]     rows: motion offsets, then end-motion
///   output_bias      [motion+1]
///
/// Params and gradients share the layout; the tag keeps them distinct types.
template <class Tag>
class ModelBuffer {
 public:
  ModelBuffer() = default;
  ModelBuffer(VocabSpec vocab, int dim)
      : vocab_(std::move(vocab)), dim_(dim), values_(layout_size(vocab_, dim), 0.0) {}

  static std::size_t layout_size(const VocabSpec& vocab, int dim) {
    const std::size_t v = static_cast<std::size_t>(vocab.total_size());
    const std::size_t c = static_cast<std::size_t>(vocab.motion.size) + 1;
    const std::size_t d = static_cast<std::size_t>(dim);
    return v * d + c * d + c * 2 * d + c;
  }

  const VocabSpec& vocab() const { return vocab_; }
  int dim() const { return dim_; }
  /// Output classes: motion ids plus the end-of-motion sentinel.
  int classes() const { return vocab_.motion.size + 1; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  MatrixMap condition_embed() { return {values_.data() + off_cond(), vocab_.total_size(), dim_}; }
  ConstMatrixMap condition_embed() const {
    return {values_.data() + off_cond(), vocab_.total_size(), dim_};
  }
  MatrixMap prev_embed() { return {values_.data() + off_prev(), classes(), dim_}; }
  ConstMatrixMap prev_embed() const { return {values_.data() + off_prev(), classes(), dim_}; }
  MatrixMap output_weight() { return {values_.data() + off_w(), classes(), 2 * dim_}; }
  ConstMatrixMap output_weight() const {
    return {values_.data() + off_w(), classes(), 2 * dim_};
  }
  VectorMap output_bias() { return {values_.data() + off_b(), classes()}; }
  ConstVectorMap output_bias() const { return {values_.data() + off_b(), classes()}; }

  void set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

  friend bool operator==(const ModelBuffer&, const ModelBuffer&) = default;

 private:
  std::size_t off_cond() const { return 0; }
  std::size_t off_prev() const {
    return static_cast<std::size_t>(vocab_.total_size()) * static_cast<std::size_t>(dim_);
  }
  std::size_t off_w() const {
    return off_prev() + static_cast<std::size_t>(classes()) * static_cast<std::size_t>(dim_);
  }
  std::size_t off_b() const {
    return off_w() + static_cast<std::size_t>(classes()) * 2 * static_cast<std::size_t>(dim_);
  }

  VocabSpec vocab_;
  int dim_ = 0;
  std::vector<double> values_;
};

struct ModelParamsTag;
struct ModelGradientTag;
using ModelParams = ModelBuffer<ModelParamsTag>;
using ModelGradient = ModelBuffer<ModelGradientTag>;

inline ModelGradient zero_gradient_like(const ModelParams& p) {
  return ModelGradient(p.vocab(), p.dim());
}

/// Gaussian initialization with standard deviation `scale`; bias starts at 0.
ModelParams init_model(const VocabSpec& vocab, int dim, double scale, Rng& rng);

/// Mean condition-embedding row over the serialized condition; zero if empty.
Eigen::VectorXd encode_condition(const ModelParams& params, const Condition& cond);

/// Row index into prev_embed for a motion token or the begin-motion sentinel.
int prev_index(const VocabSpec& vocab, TokenId prev);

/// Logits over motion ids (by offset) followed by end-of-motion.
Eigen::VectorXd next_token_logits(const ModelParams& params, const Eigen::VectorXd& context,
                                  TokenId prev);

/// In-place log-softmax with max subtraction.
void log_softmax_inplace(Eigen::VectorXd& logits);

/// Length-normalized teacher-forced log-likelihood; the end-of-motion step is
/// included, so normalization is by |motion| + 1.
double sequence_loglik(const ModelParams& params, const Condition& cond,
                       const MotionSequence& motion);

/// Adds scale * d(loglik)/d(params) into `grad` and returns the log-likelihood.
double accumulate_loglik_gradient(const ModelParams& params, const Condition& cond,
                                  const MotionSequence& motion, double scale,
                                  ModelGradient& grad);

ModelGradient loglik_gradient(const ModelParams& params, const Condition& cond,
                              const MotionSequence& motion);

/// Ancestral sampling at `temperature` until end-of-motion or `max_len`
/// tokens. An immediate end is redrawn once, then replaced by the single most
/// likely motion token.
MotionSequence sample_motion(const ModelParams& params, const Condition& cond, int max_len,
                             double temperature, Rng& rng);

}  // namespace reactpref
