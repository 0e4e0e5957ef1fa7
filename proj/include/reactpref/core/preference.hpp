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

enum class TrainingObjective {
  Preference,    // weighted -l_G + lambda_rank * L_rank
  CrossEntropy,  // ablation: one Gold target per group, unweighted
};

struct PreferenceConfig {
  double margin = 0.5;
  double lambda_rank = 0.25;
  double lambda_gn = 0.25;
  int samples_per_tier = 2;
  double modality_dropout_p = 0.3;
  bool frequency_reweighting = true;
  TrainingObjective objective = TrainingObjective::Preference;
  OptimizerConfig optimizer;

  void validate() const;
};

struct TierScores {
  double gold = 0.0;
  double silver = 0.0;
  double negative = 0.0;
};

/// log((1/n) sum exp(l_k)), stable; requires a non-empty list.
double aggregate_tier(std::span<const double> logliks);

/// Soft-margin ranking loss over the three adjacent/extreme tier gaps.
double ranking_loss(const TierScores& t, double margin, double lambda_gn);

/// Partial derivatives of ranking_loss with respect to (l_G, l_S, l_N).
TierScores ranking_loss_gradient(const TierScores& t, double margin, double lambda_gn);

/// Aggregated tier scores over every candidate of a tier-complete group.
TierScores group_tier_scores(const ModelParams& params, const Group& group);

struct WeightedGroup {
  Group group;
  double weight = 1.0;
};

struct ObjectiveValue {
  double loss = 0.0;
  TierScores mean_tiers;  // unweighted batch means, for logging
};

/// Weighted objective sum_i w_i(-l_G + lambda_rank L_rank) / sum_i w_i.
double total_objective(std::span<const WeightedGroup> groups, const ModelParams& params,
                       const PreferenceConfig& cfg);

ModelGradient objective_gradient(std::span<const WeightedGroup> groups,
                                 const ModelParams& params, const PreferenceConfig& cfg);

/// Value and gradient in one pass; `grad` is overwritten when non-null.
ObjectiveValue evaluate_objective(std::span<const WeightedGroup> groups,
                                  const ModelParams& params, const PreferenceConfig& cfg,
                                  ModelGradient* grad);

/// Drops each active modality with probability p; if every active modality
/// would drop, one of them (uniformly chosen) is kept.
Condition apply_modality_dropout(const Condition& cond, double p, Rng& rng,
                                 const VocabSpec& vocab);

struct TrainingLogEntry {
  std::int64_t step = 0;
  double loss = 0.0;
  TierScores tiers;
  double grad_norm = 0.0;
};

std::string to_jsonl(const std::vector<TrainingLogEntry>& log);

struct PreferenceTrainingState {
  ModelParams params;
  AdamW optimizer;
  std::int64_t step = 0;

  static PreferenceTrainingState fresh(ModelParams params);
};

struct PreferenceTrainingRun {
  PreferenceTrainingState state;
  std::vector<TrainingLogEntry> log;
};

/// Runs optimizer steps from state.step up to `stop_at` (default: the
/// configured total). Step s draws from Rng(seed).split(s), so a run resumed
/// from a saved state matches an uninterrupted one.
PreferenceTrainingRun train_preference(PreferenceTrainingState state, const Dataset& dataset,
                                       const PreferenceConfig& cfg, std::uint64_t seed,
                                       std::optional<std::int64_t> stop_at = std::nullopt);

}  // namespace reactpref
