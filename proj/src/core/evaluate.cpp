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

#include "reactpref/core/evaluate.hpp"

namespace reactpref {

std::vector<double> JudgeScorer::score(const Group& group, std::span<const MotionSequence> motions,
                                       Mode mode) const {
  const JudgeWeights& w = params_.weights;
  const Condition nulled = strict_l2_nullify(group.condition, mode, w.vocab());
  const ConditionEncoding enc = encode_condition(w, nulled);
  std::vector<double> out;
  out.reserve(motions.size());
  for (const auto& m : motions) out.push_back(compatibility(enc.fused.z, encode_motion(w, m).z, w.tau()));
  return out;
}

Eigen::VectorXd JudgeFeatureMap::features(const MotionSequence& motion) const {
  return encode_motion(params_.weights, motion).z;
}

void EvalConfig::validate() const {
  require(!mode.empty(), ErrorKind::Config, "evaluation mode must be non-empty");
  require(samples_per_group >= 1, ErrorKind::Config, "samples_per_group must be >= 1");
  require(gen_at_k >= 1, ErrorKind::Config, "gen_at_k must be >= 1");
  require(diversity_subset >= 1, ErrorKind::Config, "diversity_samples must be >= 1");
  require(temperature > 0.0, ErrorKind::Config, "temperature must be > 0");
}

Json EvalConfig::to_json() const {
  return Json{{"mode", mode.label()},
              {"samples_per_group", samples_per_group},
              {"gen_at_k", gen_at_k},
              {"diversity_samples", diversity_subset},
              {"aggregate", aggregate_name(aggregate)},
              {"temperature", temperature},
              {"exponential_gain", exponential_gain},
              {"seed", seed}};
}

Rng diversity_rng(std::uint64_t seed) { return Rng(splitmix64(seed ^ 0xd1e5u)); }

EvaluationResult evaluate_generation(const ModelParams& model, const CandidateScorer& scorer,
                                     const FeatureMap& features, std::span<const Group> groups,
                                     const EvalConfig& cfg) {
  cfg.validate();
  require(!groups.empty(), ErrorKind::InvalidArgument, "evaluation split is empty");
  const VocabSpec& vocab = model.vocab();
  if (const VocabSpec* sv = scorer.vocab())
    require(*sv == vocab, ErrorKind::InvalidArgument, "judge and model vocabularies differ");

  EvaluationResult out;
  const Rng root(cfg.seed);
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const Group& group = groups[gi];
    validate_condition(group.condition, vocab);
    Rng rng = root.split(gi);
    const Condition cond = nullify_modalities(group.condition, cfg.mode, vocab);
    require(!cond.mode.empty(), ErrorKind::InvalidArgument,
            "group '" + group.group_id + "' has no modality under mode " + cfg.mode.label());

    std::vector<MotionSequence> motions;
    for (const auto& c : group.candidates) motions.push_back(c.motion);
    for (int s = 0; s < cfg.samples_per_group; ++s) {
      MotionSequence m = sample_motion(model, cond, vocab.max_target_length, cfg.temperature, rng);
      m.motion_id = "~gen-" + std::to_string(s);
      motions.push_back(std::move(m));
    }
    const std::vector<double> scores = scorer.score(group, motions, cfg.mode);
    require(scores.size() == motions.size(), ErrorKind::Runtime, "scorer returned a wrong count");

    GroupScores gs{group.group_id, {}};
    for (std::size_t i = 0; i < motions.size(); ++i) {
      require(std::isfinite(scores[i]), ErrorKind::Numeric, "non-finite judge score");
      const bool generated = i >= group.candidates.size();
      const Origin origin = generated ? Origin::Generated : origin_of(group.candidates[i].tier);
      gs.candidates.push_back({motions[i].motion_id, origin, scores[i]});
      if (generated)
        out.features.generated.push_back(features.features(motions[i]));
      else if (origin == Origin::Gold || origin == Origin::Silver)
        out.features.real.push_back(features.features(motions[i]));
    }
    out.groups.push_back(std::move(gs));
  }
  out.features.diversity_subset = cfg.diversity_subset;

  out.report = ranking_metrics(out.groups, cfg.gen_at_k, cfg.aggregate, cfg.exponential_gain);
  if (out.features.real.size() >= 2 && out.features.generated.size() >= 2)
    out.report.fid = frechet_distance(estimate_gaussian(out.features.real),
                                      estimate_gaussian(out.features.generated));
  const std::size_t subset =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.diversity_subset),
                            out.features.generated.size() / 2);
  if (subset >= 1) {
    Rng drng = diversity_rng(cfg.seed);
    out.report.diversity = diversity(out.features.generated, static_cast<int>(subset), drng);
  }
  out.report.config = cfg.to_json();
  return out;
}

}  // namespace reactpref
