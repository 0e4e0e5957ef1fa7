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
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "reactpref/core/dataset.hpp"
#include "reactpref/core/evaluate.hpp"
#include "reactpref/core/json_util.hpp"

namespace reactpref {

struct LengthRange {
  int min = 1;
  int max = 1;
};

/// Generator settings for the planted world.
///
/// Every concept owns an equal share of the text, audio and motion
/// codewords. Motions are drawn around "anchors": the pure concepts and the
/// blends leaning each concept toward one neighbour. For a group about concept
/// k, Gold motions come from anchor k, Silver from the two blends of k, and
/// Negative from every other anchor.
struct WorldConfig {
  std::uint64_t seed = 0;
  int n_concepts = 8;
  std::array<int, 3> groups_per_split = {256, 32, 64};
  std::array<int, 3> candidates_per_tier = {3, 11, 35};
  int motions_per_anchor = 24;
  LengthRange motion_length = {6, 12};
  LengthRange text_length = {4, 10};
  LengthRange audio_length = {6, 14};
  int text_vocab = 64;
  int audio_vocab = 64;
  int emotion_vocab = 8;
  int motion_vocab = 64;
  int feature_dim = 16;
  double noise = 0.1;          // perturbation of latent vectors
  double token_jitter = 0.5;   // per-token perturbation before snapping
  double codebook_spread = 0.2;
  double silver_blend = 0.5;  // weight of the neighbour concept in Silver anchors, in (0, 1)
  /// When positive, one extra motion is added as a Negative to this fraction of
  /// the training groups.
  double dominant_negative_fraction = 0.0;

  void validate() const;
  Json to_json() const;
  static WorldConfig from_json(const Json& j);
};

inline constexpr const char* kDominantMotionId = "m-dominant";

struct PlantedWorld {
  WorldConfig config;
  VocabSpec vocab;
  std::vector<Eigen::VectorXd> concepts;         // orthonormal, feature_dim each
  std::vector<Eigen::VectorXd> motion_codebook;  // one per motion-vocab offset
  std::map<std::string, Eigen::VectorXd> features;  // motion id -> planted feature
  std::map<std::string, int> group_concepts;        // group id -> concept
  Dataset dataset;

  /// Mean of the codewords of the motion's tokens.
  Eigen::VectorXd feature_of(const MotionSequence& motion) const;
  /// Planted similarity between a group's concept and a motion.
  double similarity(const std::string& group_id, const MotionSequence& motion) const;

  /// Sidecar document: config, concepts, codebook, group concepts and features.
  std::string sidecar_json() const;
  static PlantedWorld from_sidecar(std::string_view json_text, Dataset dataset);
};

PlantedWorld generate_world(const WorldConfig& cfg);

/// Candidates ordered by planted similarity (descending, ties by motion id).
std::vector<const Candidate*> oracle_rank(const PlantedWorld& world, const Group& group);

/// Scores a motion by <concept of the group, planted feature of the motion>.
class PlantedScorer final : public CandidateScorer {
 public:
  explicit PlantedScorer(const PlantedWorld& world) : world_(world) {}
  std::vector<double> score(const Group& group, std::span<const MotionSequence> motions,
                            Mode mode) const override;
  const VocabSpec* vocab() const override { return &world_.vocab; }

 private:
  const PlantedWorld& world_;
};

class PlantedFeatureMap final : public FeatureMap {
 public:
  explicit PlantedFeatureMap(const PlantedWorld& world) : world_(world) {}
  Eigen::VectorXd features(const MotionSequence& motion) const override {
    return world_.feature_of(motion);
  }

 private:
  const PlantedWorld& world_;
};

}  // namespace reactpref
