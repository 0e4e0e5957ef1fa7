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

#include "reactpref/core/judge.hpp"
#include "reactpref/core/metrics.hpp"
#include "reactpref/core/oracle.hpp"
#include "reactpref/core/seq_model.hpp"

namespace reactpref {

/// Scores motions against a group's condition under a modality mode.
class CandidateScorer {
 public:
  virtual ~CandidateScorer() = default;
  virtual std::vector<double> score(const Group& group, std::span<const MotionSequence> motions,
                                    Mode mode) const = 0;
  /// Vocabulary the scorer was built for, when it has one.
  virtual const VocabSpec* vocab() const { return nullptr; }
};

class JudgeScorer final : public CandidateScorer {
 public:
  explicit JudgeScorer(const JudgeParams& params) : params_(params) {}
  std::vector<double> score(const Group& group, std::span<const MotionSequence> motions,
                            Mode mode) const override;
  const VocabSpec* vocab() const override { return &params_.weights.vocab(); }

 private:
  const JudgeParams& params_;
};

/// Motion feature extractor used for FID and diversity.
class FeatureMap {
 public:
  virtual ~FeatureMap() = default;
  virtual Eigen::VectorXd features(const MotionSequence& motion) const = 0;
};

class JudgeFeatureMap final : public FeatureMap {
 public:
  explicit JudgeFeatureMap(const JudgeParams& params) : params_(params) {}
  Eigen::VectorXd features(const MotionSequence& motion) const override;

 private:
  const JudgeParams& params_;
};

struct EvalConfig {
  Mode mode = Mode::all();
  int samples_per_group = 4;
  int gen_at_k = 3;
  int diversity_subset = 32;
  GeneratedAggregate aggregate = GeneratedAggregate::Mean;
  double temperature = 1.0;
  bool exponential_gain = false;
  std::uint64_t seed = 0;

  void validate() const;
  Json to_json() const;
};

struct EvaluationResult {
  MetricsReport report;
  std::vector<GroupScores> groups;
  oracle::FeatureSets features;
};

/// Stream used for the diversity draw; group g samples from Rng(seed).split(g).
Rng diversity_rng(std::uint64_t seed);

/// Samples motions from the model for every group (conditions reduced to the
/// mode), scores them together with the annotated candidates, and computes
/// every metric. FID compares generated features with the Gold and Silver
/// motions of the same groups.
EvaluationResult evaluate_generation(const ModelParams& model, const CandidateScorer& scorer,
                                     const FeatureMap& features, std::span<const Group> groups,
                                     const EvalConfig& cfg);

}  // namespace reactpref
