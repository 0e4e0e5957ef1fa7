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

#include "reactpref/core/seq_model.hpp"

#include <cmath>

#include "reactpref/core/error.hpp"

namespace reactpref {

ModelParams init_model(const VocabSpec& vocab, int dim, double scale, Rng& rng) {
  require(dim >= 1, ErrorKind::InvalidArgument, "model dim must be >= 1");
  vocab.validate();
  ModelParams p(vocab, dim);
  auto fill = [&](auto block) {
    for (Eigen::Index i = 0; i < block.size(); ++i) block.data()[i] = scale * rng.normal();
  };
  fill(p.condition_embed());
  fill(p.prev_embed());
  fill(p.output_weight());
  return p;
}

Eigen::VectorXd encode_condition(const ModelParams& params, const Condition& cond) {
  const auto tokens = serialize_condition(cond, params.vocab());
  Eigen::VectorXd ctx = Eigen::VectorXd::Zero(params.dim());
  if (tokens.empty()) return ctx;
  const auto table = params.condition_embed();
  for (TokenId t : tokens) ctx += table.row(t).transpose();
  ctx /= static_cast<double>(tokens.size());
  return ctx;
}

int prev_index(const VocabSpec& vocab, TokenId prev) {
  if (prev == vocab.special.begin_motion) return vocab.motion.size;
  require(vocab.motion.contains(prev), ErrorKind::InvalidArgument,
          "previous token " + std::to_string(prev) + " is neither a motion id nor begin-motion");
  return vocab.motion.offset(prev);
}

Eigen::VectorXd next_token_logits(const ModelParams& params, const Eigen::VectorXd& context,
                                  TokenId prev) {
  const int d = params.dim();
  require(context.size() == d, ErrorKind::InvalidArgument, "context has wrong dimension");
  const auto w = params.output_weight();
  const auto e = params.prev_embed().row(prev_index(params.vocab(), prev)).transpose();
  return w.leftCols(d) * context + w.rightCols(d) * e + params.output_bias();
}

void log_softmax_inplace(Eigen::VectorXd& logits) {
  const double hi = logits.maxCoeff();
  const double lse = hi + std::log((logits.array() - hi).exp().sum());
  logits.array() -= lse;
}

namespace {

// Walks the teacher-forced steps; `visit(step_index, prev_row, target_class,
// log_probs)` sees the log-softmax of each step.
template <class Visit>
double teacher_forced(const ModelParams& params, const Eigen::VectorXd& ctx,
                      const MotionSequence& motion, Visit&& visit) {
  const VocabSpec& vocab = params.vocab();
  require(!motion.tokens.empty(), ErrorKind::InvalidArgument, "motion sequence is empty");
  const int d = params.dim();
  const auto w = params.output_weight();
  const auto prev_table = params.prev_embed();
  const Eigen::VectorXd base = w.leftCols(d) * ctx + params.output_bias();

  const std::size_t steps = motion.tokens.size() + 1;
  int prev_row = vocab.motion.size;
  double total = 0.0;
  Eigen::VectorXd logp(params.classes());
  for (std::size_t t = 0; t < steps; ++t) {
    int target;
    if (t < motion.tokens.size()) {
      const TokenId tok = motion.tokens[t];
      require(vocab.motion.contains(tok), ErrorKind::InvalidArgument,
              "token " + std::to_string(tok) + " outside the motion range");
      target = vocab.motion.offset(tok);
    } else {
      target = vocab.motion.size;
    }
    logp.noalias() = base + w.rightCols(d) * prev_table.row(prev_row).transpose();
    log_softmax_inplace(logp);
    total += logp[target];
    visit(prev_row, target, logp);
    prev_row = target;
  }
  const double value = total / static_cast<double>(steps);
  require(std::isfinite(value), ErrorKind::Numeric,
          "non-finite log-likelihood (parameter blow-up?)");
  return value;
}

}  // namespace

double sequence_loglik(const ModelParams& params, const Condition& cond,
                       const MotionSequence& motion) {
  const Eigen::VectorXd ctx = encode_condition(params, cond);
  return teacher_forced(params, ctx, motion, [](int, int, const Eigen::VectorXd&) {});
}

double accumulate_loglik_gradient(const ModelParams& params, const Condition& cond,
                                  const MotionSequence& motion, double scale,
                                  ModelGradient& grad) {
  require(grad.vocab() == params.vocab() && grad.dim() == params.dim(),
          ErrorKind::InvalidArgument, "gradient shape does not match parameters");
  const int d = params.dim();
  const auto tokens = serialize_condition(cond, params.vocab());
  Eigen::VectorXd ctx = Eigen::VectorXd::Zero(d);
  const auto cond_table = params.condition_embed();
  for (TokenId t : tokens) ctx += cond_table.row(t).transpose();
  if (!tokens.empty()) ctx /= static_cast<double>(tokens.size());

  const double step_scale = scale / static_cast<double>(motion.tokens.size() + 1);
  const auto w = params.output_weight();
  const auto prev_table = params.prev_embed();
  auto gw = grad.output_weight();
  auto gb = grad.output_bias();
  auto gprev = grad.prev_embed();
  Eigen::VectorXd gctx = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd dlogits(params.classes());

  const double value = teacher_forced(
      params, ctx, motion, [&](int prev_row, int target, const Eigen::VectorXd& logp) {
        // d log p[target] / d logits = onehot(target) - softmax
        dlogits = -logp.array().exp();
        dlogits[target] += 1.0;
        dlogits *= step_scale;
        gw.leftCols(d).noalias() += dlogits * ctx.transpose();
        gw.rightCols(d).noalias() += dlogits * prev_table.row(prev_row);
        gb += dlogits;
        gctx.noalias() += w.leftCols(d).transpose() * dlogits;
        gprev.row(prev_row).noalias() += (w.rightCols(d).transpose() * dlogits).transpose();
      });

  if (!tokens.empty()) {
    auto gcond = grad.condition_embed();
    const Eigen::RowVectorXd share = gctx.transpose() / static_cast<double>(tokens.size());
    for (TokenId t : tokens) gcond.row(t) += share;
  }
  return value;
}

ModelGradient loglik_gradient(const ModelParams& params, const Condition& cond,
                              const MotionSequence& motion) {
  ModelGradient g = zero_gradient_like(params);
  accumulate_loglik_gradient(params, cond, motion, 1.0, g);
  return g;
}

namespace {

int draw_class(const Eigen::VectorXd& logits, double temperature, Rng& rng) {
  Eigen::VectorXd scaled = logits / temperature;
  const double hi = scaled.maxCoeff();
  Eigen::VectorXd p = (scaled.array() - hi).exp();
  const double total = p.sum();
  const double u = rng.uniform() * total;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    acc += p[k];
    if (u < acc) return static_cast<int>(k);
  }
  // Rounding can leave u at the very top; fall back to the last nonzero class.
  for (Eigen::Index k = p.size() - 1; k >= 0; --k)
    if (p[k] > 0.0) return static_cast<int>(k);
  return 0;
}

}  // namespace

MotionSequence sample_motion(const ModelParams& params, const Condition& cond, int max_len,
                             double temperature, Rng& rng) {
  require(temperature > 0.0, ErrorKind::InvalidArgument, "temperature must be positive");
  require(max_len >= 1, ErrorKind::InvalidArgument, "max_len must be >= 1");
  const VocabSpec& vocab = params.vocab();
  const int end_class = vocab.motion.size;
  const Eigen::VectorXd ctx = encode_condition(params, cond);

  MotionSequence out;
  for (int attempt = 0; attempt < 2 && out.tokens.empty(); ++attempt) {
    TokenId prev = vocab.special.begin_motion;
    while (static_cast<int>(out.tokens.size()) < max_len) {
      const int k = draw_class(next_token_logits(params, ctx, prev), temperature, rng);
      if (k == end_class) break;
      prev = vocab.motion.at(k);
      out.tokens.push_back(prev);
    }
  }
  if (out.tokens.empty()) {
    const Eigen::VectorXd logits = next_token_logits(params, ctx, vocab.special.begin_motion);
    Eigen::Index best = 0;
    logits.head(end_class).maxCoeff(&best);
    out.tokens.push_back(vocab.motion.at(static_cast<int>(best)));
  }
  return out;
}

}  // namespace reactpref
