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

#include "reactpref/core/preference.hpp"

#include <cmath>

#include "reactpref/core/json_util.hpp"
#include "reactpref/core/numeric.hpp"

namespace reactpref {

void PreferenceConfig::validate() const {
  require(margin >= 0.0, ErrorKind::Config, "margin must be >= 0");
  require(lambda_rank >= 0.0 && lambda_gn >= 0.0, ErrorKind::Config,
          "lambda_rank and lambda_gn must be >= 0");
  require(modality_dropout_p >= 0.0 && modality_dropout_p <= 1.0, ErrorKind::Config,
          "modality_dropout_p must lie in [0, 1]");
  require(samples_per_tier >= 1, ErrorKind::Config, "samples_per_tier must be >= 1");
  require(optimizer.batch_size >= 1 && optimizer.grad_accumulation >= 1, ErrorKind::Config,
          "batch_size and grad_accumulation must be >= 1");
  require(optimizer.total_steps >= 0 && optimizer.warmup_steps >= 0, ErrorKind::Config,
          "step counts must be >= 0");
  require(optimizer.learning_rate >= 0.0, ErrorKind::Config, "learning_rate must be >= 0");
}

double aggregate_tier(std::span<const double> logliks) {
  require(!logliks.empty(), ErrorKind::InvalidArgument, "aggregate_tier needs a non-empty list");
  if (logliks.size() == 1) return logliks[0];
  return log_sum_exp(logliks) - std::log(static_cast<double>(logliks.size()));
}

double ranking_loss(const TierScores& t, double margin, double lambda_gn) {
  return softplus(margin - (t.gold - t.silver)) + softplus(margin - (t.silver - t.negative)) +
         lambda_gn * softplus(margin - (t.gold - t.negative));
}

TierScores ranking_loss_gradient(const TierScores& t, double margin, double lambda_gn) {
  const double s1 = sigmoid(margin - (t.gold - t.silver));
  const double s2 = sigmoid(margin - (t.silver - t.negative));
  const double s3 = sigmoid(margin - (t.gold - t.negative));
  return {-s1 - lambda_gn * s3, s1 - s2, s2 + lambda_gn * s3};
}

namespace {

struct TierLogliks {
  std::array<std::vector<const Candidate*>, 3> members;
  std::array<std::vector<double>, 3> values;
  TierScores aggregate;
};

TierLogliks tier_logliks(const ModelParams& params, const Group& group) {
  TierLogliks out;
  for (const auto& c : group.candidates) {
    const auto k = static_cast<std::size_t>(c.tier);
    out.members[k].push_back(&c);
    out.values[k].push_back(sequence_loglik(params, group.condition, c.motion));
  }
  for (Tier t : kTiers)
    require(!out.values[static_cast<std::size_t>(t)].empty(), ErrorKind::InvalidArgument,
            "group '" + group.group_id + "' has no " + tier_name(t) + " candidate");
  out.aggregate = {aggregate_tier(out.values[0]), aggregate_tier(out.values[1]),
                   aggregate_tier(out.values[2])};
  return out;
}

double component(const TierScores& t, std::size_t k) {
  return k == 0 ? t.gold : (k == 1 ? t.silver : t.negative);
}

}  // namespace

TierScores group_tier_scores(const ModelParams& params, const Group& group) {
  return tier_logliks(params, group).aggregate;
}

ObjectiveValue evaluate_objective(std::span<const WeightedGroup> groups,
                                  const ModelParams& params, const PreferenceConfig& cfg,
                                  ModelGradient* grad) {
  require(!groups.empty(), ErrorKind::InvalidArgument, "objective needs at least one group");
  const bool ce = cfg.objective == TrainingObjective::CrossEntropy;
  double weight_sum = 0.0;
  for (const auto& g : groups) {
    require(g.weight >= 0.0, ErrorKind::InvalidArgument, "group weights must be >= 0");
    weight_sum += ce ? 1.0 : g.weight;
  }
  require(weight_sum > 0.0, ErrorKind::InvalidArgument, "group weights sum to zero");
  if (grad != nullptr) {
    *grad = zero_gradient_like(params);
  }

  ObjectiveValue out;
  for (const auto& wg : groups) {
    const TierLogliks tl = tier_logliks(params, wg.group);
    const double share = (ce ? 1.0 : wg.weight) / weight_sum;
    out.mean_tiers.gold += tl.aggregate.gold;
    out.mean_tiers.silver += tl.aggregate.silver;
    out.mean_tiers.negative += tl.aggregate.negative;

    if (ce) {
      out.loss += share * -tl.values[0].front();
      if (grad != nullptr)
        accumulate_loglik_gradient(params, wg.group.condition, tl.members[0].front()->motion,
                                   -share, *grad);
      continue;
    }

    out.loss += share * (-tl.aggregate.gold +
                         cfg.lambda_rank * ranking_loss(tl.aggregate, cfg.margin, cfg.lambda_gn));
    if (grad == nullptr) continue;

    TierScores coef = ranking_loss_gradient(tl.aggregate, cfg.margin, cfg.lambda_gn);
    coef.gold = -1.0 + cfg.lambda_rank * coef.gold;
    coef.silver *= cfg.lambda_rank;
    coef.negative *= cfg.lambda_rank;
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& vals = tl.values[k];
      const double agg = component(tl.aggregate, k);
      const double n = static_cast<double>(vals.size());
      for (std::size_t j = 0; j < vals.size(); ++j) {
        // d aggregate / d l_j = exp(l_j - aggregate) / n
        const double soft = std::exp(vals[j] - agg) / n;
        const double c = share * component(coef, k) * soft;
        if (c != 0.0)
          accumulate_loglik_gradient(params, wg.group.condition, tl.members[k][j]->motion, c,
                                     *grad);
      }
    }
  }
  const double n = static_cast<double>(groups.size());
  out.mean_tiers = {out.mean_tiers.gold / n, out.mean_tiers.silver / n,
                    out.mean_tiers.negative / n};
  return out;
}

double total_objective(std::span<const WeightedGroup> groups, const ModelParams& params,
                       const PreferenceConfig& cfg) {
  return evaluate_objective(groups, params, cfg, nullptr).loss;
}

ModelGradient objective_gradient(std::span<const WeightedGroup> groups,
                                 const ModelParams& params, const PreferenceConfig& cfg) {
  ModelGradient g;
  evaluate_objective(groups, params, cfg, &g);
  return g;
}

Condition apply_modality_dropout(const Condition& cond, double p, Rng& rng,
                                 const VocabSpec& vocab) {
  require(p >= 0.0 && p <= 1.0, ErrorKind::InvalidArgument, "dropout probability outside [0,1]");
  std::vector<Modality> active;
  for (Modality m : kModalities)
    if (cond.mode.contains(m)) active.push_back(m);
  Mode keep;
  for (Modality m : active)
    if (!rng.bernoulli(p)) keep = keep.with(m);
  if (keep.empty()) keep = Mode::of(active[rng.index(active.size())]);
  if (keep == cond.mode) return cond;
  return nullify_modalities(cond, keep, vocab);
}

std::string to_jsonl(const std::vector<TrainingLogEntry>& log) {
  std::string out;
  for (const auto& e : log) {
    const Json j = {{"step", e.step},
                    {"loss", e.loss},
                    {"l_G", e.tiers.gold},
                    {"l_S", e.tiers.silver},
                    {"l_N", e.tiers.negative},
                    {"grad_norm", e.grad_norm}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

PreferenceTrainingState PreferenceTrainingState::fresh(ModelParams params) {
  PreferenceTrainingState s{std::move(params), AdamW(), 0};
  s.optimizer = AdamW(s.params.values().size());
  return s;
}

namespace {

Group sample_training_group(const Group& source, int per_tier, double dropout_p, Rng& rng,
                            const VocabSpec& vocab) {
  Group g;
  g.group_id = source.group_id;
  g.condition = apply_modality_dropout(source.condition, dropout_p, rng, vocab);
  for (Tier t : kTiers) {
    const auto members = source.tier(t);
    require(!members.empty(), ErrorKind::InvalidArgument,
            "training group '" + source.group_id + "' has no " + tier_name(t) + " candidate");
    const std::size_t k = std::min<std::size_t>(members.size(), static_cast<std::size_t>(per_tier));
    for (std::size_t idx : rng.sample_without_replacement(members.size(), k))
      g.candidates.push_back(*members[idx]);
  }
  return g;
}

}  // namespace

PreferenceTrainingRun train_preference(PreferenceTrainingState state, const Dataset& dataset,
                                       const PreferenceConfig& cfg, std::uint64_t seed,
                                       std::optional<std::int64_t> stop_at) {
  cfg.validate();
  const auto& train = dataset.split(Split::Train);
  const std::int64_t last = std::min(stop_at.value_or(cfg.optimizer.total_steps),
                                     cfg.optimizer.total_steps);
  PreferenceTrainingRun run{std::move(state), {}};
  if (run.state.step >= last) return run;
  require(!train.empty(), ErrorKind::InvalidArgument, "training split is empty");
  require(run.state.params.vocab() == dataset.vocab, ErrorKind::InvalidArgument,
          "model vocabulary does not match the dataset");

  std::vector<double> weights(train.size(), 1.0);
  if (cfg.frequency_reweighting && cfg.objective == TrainingObjective::Preference) {
    const FrequencyTable table = build_frequency_table(train);
    for (std::size_t i = 0; i < train.size(); ++i) weights[i] = group_weight(train[i], table);
  }

  const Rng root(seed);
  const int per_step = cfg.optimizer.batch_size * cfg.optimizer.grad_accumulation;
  ModelGradient grad = zero_gradient_like(run.state.params);
  std::vector<WeightedGroup> batch;
  for (std::int64_t step = run.state.step; step < last; ++step) {
    Rng rng = root.split(static_cast<std::uint64_t>(step));
    batch.clear();
    for (int b = 0; b < per_step; ++b) {
      const std::size_t gi = rng.index(train.size());
      batch.push_back({sample_training_group(train[gi], cfg.samples_per_tier,
                                             cfg.modality_dropout_p, rng, dataset.vocab),
                       weights[gi]});
    }
    const ObjectiveValue value = evaluate_objective(batch, run.state.params, cfg, &grad);
    require(std::isfinite(value.loss), ErrorKind::Numeric,
            "non-finite loss at step " + std::to_string(step));
    double norm2 = 0.0;
    for (double g : grad.values()) norm2 += g * g;
    run.log.push_back({step, value.loss, value.mean_tiers, std::sqrt(norm2)});
    run.state.optimizer.step(run.state.params.values(), grad.values(), cfg.optimizer,
                             scheduled_learning_rate(cfg.optimizer, step));
    run.state.step = step + 1;
  }
  return run;
}

}  // namespace reactpref
