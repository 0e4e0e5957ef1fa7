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

#include "reactpref/core/judge.hpp"

#include <cmath>
#include <map>

#include "reactpref/core/json_util.hpp"
#include "reactpref/core/numeric.hpp"

namespace reactpref {

template <class Tag>
int JudgeBuffer<Tag>::row_of(Branch b, TokenId id) const {
  const TokenRange& r = range(b);
  if (r.contains(id)) return r.offset(id);
  if ((b == Branch::Text || b == Branch::Audio) && id == vocab_.special.pad) return r.size;
  if (b == Branch::Emotion && id == vocab_.special.unknown_emotion) return r.size;
  fail(ErrorKind::InvalidArgument, "token " + std::to_string(id) + " outside the range of the " +
                                       std::string(b == Branch::Motion ? "motion"
                                                                       : modality_name(static_cast<Modality>(b))) +
                                       " branch");
}

template class JudgeBuffer<JudgeWeightsTag>;
template class JudgeBuffer<JudgeGradientTag>;

double JudgeParams::alpha() const { return std::exp(weights.tau()); }

JudgeParams init_judge(const VocabSpec& vocab, const JudgeDims& dims, Rng& rng) {
  require(dims.dim >= 1 && dims.out_dim >= 1, ErrorKind::InvalidArgument,
          "judge dimensions must be >= 1");
  require(dims.temperature > 0.0, ErrorKind::InvalidArgument, "judge temperature must be > 0");
  vocab.validate();
  JudgeParams p{JudgeWeights(vocab, dims.dim, dims.out_dim), RowMatrix(0, dims.out_dim)};
  JudgeWeights& w = p.weights;
  auto fill = [&](auto block, double scale) {
    for (Eigen::Index i = 0; i < block.size(); ++i) block.data()[i] = scale * rng.normal();
  };
  const double proj_scale = 1.0 / std::sqrt(static_cast<double>(dims.dim));
  for (Branch b : kBranches) {
    fill(w.embed(b), dims.init_scale);
    fill(w.proj_weight(b), proj_scale);
  }
  for (Modality m : kModalities) fill(w.type_embed(m), dims.init_scale);
  for (std::uint8_t bits = 1; bits < 8; ++bits)
    fill(w.mode_embed(Mode::from_bits(bits)), dims.init_scale);
  fill(w.fusion_weight(), proj_scale);
  w.tau() = std::log(1.0 / dims.temperature);
  return p;
}

namespace {

constexpr double kMinNorm = 1e-12;

struct PoolForward {
  Eigen::VectorXd attn;
  Eigen::VectorXd pooled;
  Eigen::VectorXd pre;
  double norm = 0.0;
  Eigen::VectorXd z;
};

template <class Q, class W, class B>
PoolForward attention_pool(const RowMatrix& hidden, const Q& query, const W& weight,
                           const B& bias) {
  PoolForward f;
  Eigen::VectorXd scores = hidden * query;
  const double hi = scores.maxCoeff();
  f.attn = (scores.array() - hi).exp();
  f.attn /= f.attn.sum();
  f.pooled = hidden.transpose() * f.attn;
  f.pre = weight * f.pooled + bias;
  f.norm = f.pre.norm();
  f.z = f.pre / std::max(f.norm, kMinNorm);
  return f;
}

// Backward through normalize(W * attnpool(H; q) + b). Adds into d_hidden,
// d_query, d_weight and d_bias.
template <class Q, class W, class DQ, class DW, class DB>
void attention_pool_backward(const RowMatrix& hidden, const Q& query, const W& weight,
                             const Eigen::VectorXd& attn, const Eigen::VectorXd& pooled,
                             const Eigen::VectorXd& z, double norm, const Eigen::VectorXd& dz,
                             RowMatrix& d_hidden, DQ&& d_query, DW&& d_weight, DB&& d_bias) {
  const Eigen::VectorXd dpre = (dz - z * z.dot(dz)) / std::max(norm, kMinNorm);
  d_weight.noalias() += dpre * pooled.transpose();
  d_bias += dpre;
  const Eigen::VectorXd dpooled = weight.transpose() * dpre;
  d_hidden.noalias() += attn * dpooled.transpose();
  const Eigen::VectorXd dattn = hidden * dpooled;
  const Eigen::VectorXd dscores = attn.array() * (dattn.array() - attn.dot(dattn));
  d_query.noalias() += hidden.transpose() * dscores;
  d_hidden.noalias() += dscores * query.transpose();
}

}  // namespace

BranchEncoding encode_modality(const JudgeWeights& w, Branch branch,
                               std::span<const TokenId> tokens,
                               std::span<const std::uint8_t> mask) {
  require(tokens.size() == mask.size(), ErrorKind::InvalidArgument,
          "token and mask lengths differ");
  BranchEncoding enc;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const int row = w.row_of(branch, tokens[i]);
    if (mask[i]) enc.rows.push_back(row);
  }
  const int d = w.dim();
  enc.z = Eigen::VectorXd::Zero(w.out_dim());
  enc.summary = Eigen::VectorXd::Zero(d);
  if (enc.rows.empty()) return enc;

  enc.null = false;
  const auto table = w.embed(branch);
  enc.hidden.resize(static_cast<Eigen::Index>(enc.rows.size()), d);
  for (std::size_t j = 0; j < enc.rows.size(); ++j)
    enc.hidden.row(static_cast<Eigen::Index>(j)) = table.row(enc.rows[j]);
  enc.summary = enc.hidden.colwise().mean().transpose();
  PoolForward f = attention_pool(enc.hidden, w.pool_query(branch), w.proj_weight(branch),
                                 w.proj_bias(branch));
  enc.attn = std::move(f.attn);
  enc.pooled = std::move(f.pooled);
  enc.pre = std::move(f.pre);
  enc.norm = f.norm;
  enc.z = std::move(f.z);
  return enc;
}

Condition strict_l2_nullify(const Condition& cond, Mode mode, const VocabSpec& vocab) {
  require(!mode.empty(), ErrorKind::InvalidArgument, "Strict-L2 mode must be non-empty");
  return nullify_modalities(cond, mode, vocab);
}

FusionEncoding fuse(const JudgeWeights& w, const std::array<Eigen::VectorXd, 3>& summaries,
                    Mode mode) {
  require(!mode.empty(), ErrorKind::InvalidArgument, "fusion needs an active modality");
  FusionEncoding f;
  f.mode = mode;
  for (Modality m : kModalities)
    if (mode.contains(m)) f.active.push_back(m);
  f.tokens.resize(static_cast<Eigen::Index>(f.active.size()), w.dim());
  for (std::size_t k = 0; k < f.active.size(); ++k) {
    const Modality m = f.active[k];
    f.tokens.row(static_cast<Eigen::Index>(k)) =
        (summaries[static_cast<std::size_t>(m)] + w.type_embed(m) + w.mode_embed(mode))
            .transpose();
  }
  PoolForward p = attention_pool(f.tokens, w.fusion_query(), w.fusion_weight(), w.fusion_bias());
  f.attn = std::move(p.attn);
  f.pooled = std::move(p.pooled);
  f.pre = std::move(p.pre);
  f.norm = p.norm;
  f.z = std::move(p.z);
  return f;
}

ConditionEncoding encode_condition(const JudgeWeights& w, const Condition& cond) {
  ConditionEncoding enc;
  enc.mode = cond.mode;
  enc.branches[0] = encode_modality(w, Branch::Text, cond.text_tokens, cond.text_mask);
  enc.branches[1] = encode_modality(w, Branch::Audio, cond.audio_tokens, cond.audio_mask);
  const TokenId emo[1] = {cond.emotion};
  const std::uint8_t emo_mask[1] = {
      static_cast<std::uint8_t>(cond.mode.contains(Modality::Emotion) ? 1 : 0)};
  enc.branches[2] = encode_modality(w, Branch::Emotion, emo, emo_mask);
  std::array<Eigen::VectorXd, 3> summaries;
  for (std::size_t k = 0; k < 3; ++k) {
    // Inactive modalities contribute a zero summary regardless of content.
    summaries[k] = cond.mode.contains(static_cast<Modality>(k))
                       ? enc.branches[k].summary
                       : Eigen::VectorXd::Zero(w.dim()).eval();
  }
  enc.fused = fuse(w, summaries, cond.mode);
  return enc;
}

BranchEncoding encode_motion(const JudgeWeights& w, const MotionSequence& motion) {
  require(!motion.tokens.empty(), ErrorKind::InvalidArgument, "motion sequence is empty");
  const std::vector<std::uint8_t> mask(motion.tokens.size(), 1);
  return encode_modality(w, Branch::Motion, motion.tokens, mask);
}

double compatibility(const Eigen::VectorXd& z, const Eigen::VectorXd& z_m, double tau) {
  require(z.size() == z_m.size(), ErrorKind::InvalidArgument, "embedding sizes differ");
  require(std::abs(z.norm() - 1.0) <= 1e-6 && std::abs(z_m.norm() - 1.0) <= 1e-6,
          ErrorKind::InvalidArgument, "compatibility expects unit-norm embeddings");
  return std::exp(tau) * z.dot(z_m);
}

JudgeScores judge_scores(const JudgeParams& params, const Condition& cond,
                         const MotionSequence& motion, Mode mode) {
  const JudgeWeights& w = params.weights;
  const Condition nulled = strict_l2_nullify(cond, mode, w.vocab());
  const ConditionEncoding enc = encode_condition(w, nulled);
  const BranchEncoding m = encode_motion(w, motion);
  JudgeScores s;
  s.fused = compatibility(enc.fused.z, m.z, w.tau());
  for (Modality k : kModalities) {
    const auto& b = enc.branches[static_cast<std::size_t>(k)];
    if (nulled.mode.contains(k) && !b.null)
      s.per_modality[static_cast<std::size_t>(k)] = compatibility(b.z, m.z, w.tau());
  }
  return s;
}

double judge_score(const JudgeParams& params, const Condition& cond,
                   const MotionSequence& motion, Mode mode) {
  return judge_scores(params, cond, motion, mode).fused;
}

namespace {

struct InfoNceResult {
  double loss = 0.0;
  Eigen::VectorXd dz;
  std::vector<Eigen::VectorXd> dzm;
  double dtau = 0.0;
};

InfoNceResult infonce(const Eigen::VectorXd& z, const std::vector<const Eigen::VectorXd*>& zm,
                      const std::vector<bool>& positive, const RowMatrix& bank, double beta,
                      double tau, bool want_grad) {
  const double alpha = std::exp(tau);
  const std::size_t n = zm.size();
  const auto nb = static_cast<std::size_t>(bank.rows());
  std::vector<double> all(n + nb);
  std::vector<double> pos;
  for (std::size_t x = 0; x < n; ++x) {
    all[x] = alpha * z.dot(*zm[x]);
    if (positive[x]) pos.push_back(all[x]);
  }
  require(!pos.empty(), ErrorKind::InvalidArgument, "InfoNCE needs a non-empty positive set");
  if (nb > 0) {
    const Eigen::VectorXd bank_scores = (beta * alpha) * (bank * z);
    for (std::size_t b = 0; b < nb; ++b) all[n + b] = bank_scores[static_cast<Eigen::Index>(b)];
  }
  const double lse_pos = log_sum_exp(pos);
  const double lse_all = log_sum_exp(all);
  InfoNceResult r;
  r.loss = lse_all - lse_pos;
  if (!want_grad) return r;

  r.dz = Eigen::VectorXd::Zero(z.size());
  r.dzm.assign(n, Eigen::VectorXd::Zero(z.size()));
  for (std::size_t x = 0; x < n; ++x) {
    double g = std::exp(all[x] - lse_all);
    if (positive[x]) g -= std::exp(all[x] - lse_pos);
    r.dz += (g * alpha) * *zm[x];
    r.dzm[x] = (g * alpha) * z;
    r.dtau += g * all[x];
  }
  if (nb > 0) {
    Eigen::VectorXd gb(static_cast<Eigen::Index>(nb));
    for (std::size_t b = 0; b < nb; ++b) {
      gb[static_cast<Eigen::Index>(b)] = std::exp(all[n + b] - lse_all);
      r.dtau += gb[static_cast<Eigen::Index>(b)] * all[n + b];
    }
    r.dz += (beta * alpha) * (bank.transpose() * gb);
  }
  return r;
}

void scatter_rows(const std::vector<int>& rows, const RowMatrix& d_hidden, MatrixMap table) {
  for (std::size_t j = 0; j < rows.size(); ++j)
    table.row(rows[j]) += d_hidden.row(static_cast<Eigen::Index>(j));
}

void branch_backward(const JudgeWeights& w, JudgeGradient& g, Branch b, const BranchEncoding& enc,
                     const Eigen::VectorXd* dz, const Eigen::VectorXd* dsummary) {
  if (enc.null) return;
  RowMatrix d_hidden = RowMatrix::Zero(enc.hidden.rows(), enc.hidden.cols());
  if (dz != nullptr)
    attention_pool_backward(enc.hidden, w.pool_query(b), w.proj_weight(b), enc.attn, enc.pooled,
                            enc.z, enc.norm, *dz, d_hidden, g.pool_query(b), g.proj_weight(b),
                            g.proj_bias(b));
  if (dsummary != nullptr) {
    const Eigen::RowVectorXd share =
        dsummary->transpose() / static_cast<double>(enc.hidden.rows());
    d_hidden.rowwise() += share;
  }
  scatter_rows(enc.rows, d_hidden, g.embed(b));
}

}  // namespace

double infonce_group_loss(const JudgeParams& params, const Group& group, TierSet positives,
                          Mode mode, double beta, ConditionView view) {
  const JudgeWeights& w = params.weights;
  const Condition nulled = strict_l2_nullify(group.condition, mode, w.vocab());
  const ConditionEncoding enc = encode_condition(w, nulled);
  const Eigen::VectorXd* z = &enc.fused.z;
  if (view != ConditionView::Fused) {
    const auto k = static_cast<Modality>(view);
    require(nulled.mode.contains(k), ErrorKind::InvalidArgument,
            std::string("modality ") + modality_name(k) + " is inactive under mode " +
                mode.label());
    z = &enc.branches[static_cast<std::size_t>(k)].z;
  }
  std::vector<BranchEncoding> motions;
  motions.reserve(group.candidates.size());
  std::vector<const Eigen::VectorXd*> zm;
  std::vector<bool> positive;
  for (const auto& c : group.candidates) motions.push_back(encode_motion(w, c.motion));
  for (std::size_t i = 0; i < motions.size(); ++i) {
    zm.push_back(&motions[i].z);
    positive.push_back(positives.contains(group.candidates[i].tier));
  }
  return infonce(*z, zm, positive, params.bank, beta, w.tau(), false).loss;
}

double judge_total_loss(const JudgeParams& params, std::span<const ModedGroup> batch,
                        const JudgeLossConfig& cfg, JudgeGradient* grad) {
  require(!batch.empty(), ErrorKind::InvalidArgument, "judge loss needs a non-empty batch");
  const JudgeWeights& w = params.weights;
  if (grad != nullptr) *grad = zero_gradient_like(w);
  const double scale = 1.0 / static_cast<double>(batch.size());
  const std::array<double, 3> lambda_k = {cfg.lambda_text, cfg.lambda_audio, cfg.lambda_emotion};
  const bool want_grad = grad != nullptr;

  double total = 0.0;
  for (const auto& item : batch) {
    const Condition nulled = strict_l2_nullify(item.group.condition, item.mode, w.vocab());
    const ConditionEncoding enc = encode_condition(w, nulled);
    std::vector<BranchEncoding> motions;
    motions.reserve(item.group.candidates.size());
    for (const auto& c : item.group.candidates) motions.push_back(encode_motion(w, c.motion));
    std::vector<const Eigen::VectorXd*> zm;
    std::vector<bool> positive;
    for (std::size_t i = 0; i < motions.size(); ++i) {
      zm.push_back(&motions[i].z);
      positive.push_back(cfg.positives.contains(item.group.candidates[i].tier));
    }

    std::array<Eigen::VectorXd, 3> dz_branch;
    Eigen::VectorXd dz_fused;
    std::vector<Eigen::VectorXd> dzm(motions.size(), Eigen::VectorXd::Zero(w.out_dim()));
    double dtau = 0.0;
    auto term = [&](const Eigen::VectorXd& z, double lambda, Eigen::VectorXd& dz_out) {
      if (lambda == 0.0) return;
      InfoNceResult r = infonce(z, zm, positive, params.bank, cfg.beta, w.tau(), want_grad);
      total += scale * lambda * r.loss;
      if (!want_grad) return;
      const double c = scale * lambda;
      dz_out = c * r.dz;
      for (std::size_t i = 0; i < dzm.size(); ++i) dzm[i] += c * r.dzm[i];
      dtau += c * r.dtau;
    };
    term(enc.fused.z, cfg.lambda_fused, dz_fused);
    for (Modality k : kModalities) {
      const auto ki = static_cast<std::size_t>(k);
      if (nulled.mode.contains(k) && !enc.branches[ki].null)
        term(enc.branches[ki].z, lambda_k[ki], dz_branch[ki]);
    }
    if (!want_grad) continue;

    JudgeGradient& g = *grad;
    g.tau() += dtau;
    std::array<Eigen::VectorXd, 3> dsummary;
    if (dz_fused.size() > 0) {
      const FusionEncoding& f = enc.fused;
      RowMatrix d_tokens = RowMatrix::Zero(f.tokens.rows(), f.tokens.cols());
      attention_pool_backward(f.tokens, w.fusion_query(), w.fusion_weight(), f.attn, f.pooled,
                              f.z, f.norm, dz_fused, d_tokens, g.fusion_query(),
                              g.fusion_weight(), g.fusion_bias());
      for (std::size_t k = 0; k < f.active.size(); ++k) {
        const Eigen::VectorXd row = d_tokens.row(static_cast<Eigen::Index>(k)).transpose();
        g.type_embed(f.active[k]) += row;
        g.mode_embed(f.mode) += row;
        dsummary[static_cast<std::size_t>(f.active[k])] = row;
      }
    }
    for (std::size_t k = 0; k < 3; ++k) {
      const Eigen::VectorXd* dz = dz_branch[k].size() > 0 ? &dz_branch[k] : nullptr;
      const Eigen::VectorXd* ds = dsummary[k].size() > 0 ? &dsummary[k] : nullptr;
      if (dz != nullptr || ds != nullptr)
        branch_backward(w, g, static_cast<Branch>(k), enc.branches[k], dz, ds);
    }
    for (std::size_t i = 0; i < motions.size(); ++i)
      branch_backward(w, g, Branch::Motion, motions[i], &dzm[i], nullptr);
  }
  return total;
}

void JudgeTrainConfig::validate() const {
  require(dims.dim >= 1 && dims.out_dim >= 1, ErrorKind::Config, "judge dims must be >= 1");
  require(dims.temperature > 0.0, ErrorKind::Config, "judge temperature must be > 0");
  require(bank_size >= 0, ErrorKind::Config, "bank_size must be >= 0");
  require(samples_per_tier >= 1, ErrorKind::Config, "samples_per_tier must be >= 1");
  require(loss.lambda_fused >= 0.0 && loss.lambda_text >= 0.0 && loss.lambda_audio >= 0.0 &&
              loss.lambda_emotion >= 0.0,
          ErrorKind::Config, "judge loss weights must be >= 0");
  require(loss.positives.gold || loss.positives.silver || loss.positives.negative,
          ErrorKind::Config, "positive tier set must be non-empty");
  require(optimizer.batch_size >= 1 && optimizer.grad_accumulation >= 1 &&
              optimizer.total_steps >= 0,
          ErrorKind::Config, "invalid judge optimizer settings");
}

std::string to_jsonl(const std::vector<JudgeLogEntry>& log) {
  std::string out;
  for (const auto& e : log) {
    const Json j = {{"step", e.step},
                    {"loss", e.loss},
                    {"mode", e.mode.label()},
                    {"alpha", e.alpha},
                    {"grad_norm", e.grad_norm}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

JudgeTrainingState JudgeTrainingState::fresh(JudgeParams params) {
  JudgeTrainingState s{std::move(params), AdamW(), 0};
  s.optimizer = AdamW(s.params.weights.values().size());
  return s;
}

void refresh_bank(JudgeParams& params, std::span<const MotionSequence> pool, int bank_size,
                  Rng& rng) {
  const JudgeWeights& w = params.weights;
  params.bank.resize(bank_size, w.out_dim());
  if (bank_size == 0) return;
  require(!pool.empty(), ErrorKind::InvalidArgument, "motion bank pool is empty");
  std::vector<Eigen::VectorXd> cache(pool.size());
  for (int b = 0; b < bank_size; ++b) {
    const std::size_t i = rng.index(pool.size());
    if (cache[i].size() == 0) cache[i] = encode_motion(w, pool[i]).z;
    params.bank.row(b) = cache[i].transpose();
  }
}

namespace {

std::vector<MotionSequence> unique_motions(const std::vector<Group>& groups) {
  std::vector<MotionSequence> out;
  std::map<std::string, bool> seen;
  for (const auto& g : groups)
    for (const auto& c : g.candidates)
      if (seen.emplace(c.motion.motion_id, true).second) out.push_back(c.motion);
  return out;
}

}  // namespace

JudgeTrainingRun train_judge(JudgeTrainingState state, const Dataset& dataset,
                             const JudgeTrainConfig& cfg, std::uint64_t seed,
                             std::optional<std::int64_t> stop_at) {
  cfg.validate();
  const auto& train = dataset.split(Split::Train);
  const std::int64_t last = std::min(stop_at.value_or(cfg.optimizer.total_steps),
                                     cfg.optimizer.total_steps);
  JudgeTrainingRun run{std::move(state), {}};
  if (run.state.step >= last) return run;
  require(!train.empty(), ErrorKind::InvalidArgument, "training split is empty");
  require(run.state.params.weights.vocab() == dataset.vocab, ErrorKind::InvalidArgument,
          "judge vocabulary does not match the dataset");

  const std::vector<MotionSequence> pool = unique_motions(train);
  const Rng root(seed);
  const auto& modes = evaluation_modes();
  const int per_step = cfg.optimizer.batch_size * cfg.optimizer.grad_accumulation;
  JudgeGradient grad = zero_gradient_like(run.state.params.weights);
  std::vector<ModedGroup> batch;
  for (std::int64_t step = run.state.step; step < last; ++step) {
    Rng rng = root.split(static_cast<std::uint64_t>(step));
    const Mode mode = modes[rng.index(modes.size())];
    refresh_bank(run.state.params, pool, cfg.bank_size, rng);
    batch.clear();
    for (int b = 0; b < per_step; ++b) {
      const Group& src = train[rng.index(train.size())];
      ModedGroup mg{{src.group_id, src.condition, {}}, mode};
      for (Tier t : kTiers) {
        const auto members = src.tier(t);
        const std::size_t k = std::min<std::size_t>(members.size(),
                                                    static_cast<std::size_t>(cfg.samples_per_tier));
        for (std::size_t idx : rng.sample_without_replacement(members.size(), k))
          mg.group.candidates.push_back(*members[idx]);
      }
      batch.push_back(std::move(mg));
    }
    const double loss = judge_total_loss(run.state.params, batch, cfg.loss, &grad);
    require(std::isfinite(loss), ErrorKind::Numeric,
            "non-finite judge loss at step " + std::to_string(step));
    double norm2 = 0.0;
    for (double g : grad.values()) norm2 += g * g;
    run.log.push_back({step, loss, mode, run.state.params.alpha(), std::sqrt(norm2)});
    run.state.optimizer.step(run.state.params.weights.values(), grad.values(), cfg.optimizer,
                             scheduled_learning_rate(cfg.optimizer, step));
    run.state.step = step + 1;
  }
  return run;
}

}  // namespace reactpref
