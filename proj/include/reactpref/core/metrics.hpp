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

#include <Eigen/Dense>

#include "reactpref/core/dataset.hpp"
#include "reactpref/core/json_util.hpp"
#include "reactpref/core/rng.hpp"

namespace reactpref {

enum class Origin : std::uint8_t { Gold = 0, Silver = 1, Negative = 2, Generated = 3 };

const char* origin_name(Origin origin) noexcept;
Origin origin_of(Tier tier) noexcept;

struct ScoredCandidate {
  std::string id;
  Origin origin = Origin::Negative;
  double score = 0.0;
};

/// How the generated set of a group is summarised before comparing it with a tier mean.
enum class GeneratedAggregate : std::uint8_t { Mean, Best };

const char* aggregate_name(GeneratedAggregate a) noexcept;
GeneratedAggregate parse_aggregate(std::string_view name);

struct GroupScores {
  std::string group_id;
  std::vector<ScoredCandidate> candidates;

  /// Arithmetic mean of one partition, or nothing when it is empty.
  std::optional<double> mean(Origin origin) const;
  std::optional<double> best(Origin origin) const;
  std::size_t count(Origin origin) const;
  /// The left/right value used by win_rate for `origin`.
  double side(Origin origin, GeneratedAggregate aggregate) const;
};

/// 1 if u > v, 0.5 on exact equality, 0 otherwise.
double kappa(double u, double v);

double win_rate(std::span<const GroupScores> groups, Origin left, Origin right,
                GeneratedAggregate aggregate = GeneratedAggregate::Mean);

struct RankedCandidate {
  ScoredCandidate candidate;
  int rank = 0;  // 1-based
};

/// Descending score; ties broken by ascending id.
std::vector<RankedCandidate> rank_group(std::span<const ScoredCandidate> scores);

/// 1 when some generated candidate ranks within the top k of the pooled set.
int gen_at_k(const GroupScores& group, int k);
double gen_at_k_rate(std::span<const GroupScores> groups, int k);

/// 1 / best Gold rank within the annotated pool (generated candidates excluded).
double reciprocal_gold_rank(const GroupScores& group);
double mrr_gold(std::span<const GroupScores> groups);

/// nDCG@k of a ranked list of tiers: relevance 2/1/0, 1/log2(rank+1) discount.
/// A list without any relevant item scores 0.
double ndcg_at_k(std::span<const Tier> ranked, int k, bool exponential_gain = false);
double group_ndcg(const GroupScores& group, int k, bool exponential_gain = false);
double mean_ndcg(std::span<const GroupScores> groups, int k, bool exponential_gain = false);

struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Sample mean and unbiased covariance; at least two samples.
Gaussian estimate_gaussian(std::span<const Eigen::VectorXd> features);

/// ||mu_r - mu_g||^2 + Tr(S_r + S_g - 2 (S_r^1/2 S_g S_r^1/2)^1/2).
double frechet_distance(const Eigen::VectorXd& mu_r, const Eigen::MatrixXd& cov_r,
                        const Eigen::VectorXd& mu_g, const Eigen::MatrixXd& cov_g);
double frechet_distance(const Gaussian& real, const Gaussian& generated);

/// Mean distance between two disjoint random subsets of size `subset_size`.
double diversity(std::span<const Eigen::VectorXd> features, int subset_size, Rng& rng);
double mean_pair_distance(std::span<const Eigen::VectorXd> left,
                          std::span<const Eigen::VectorXd> right);

struct MetricsReport {
  std::optional<double> win_g_gt_n;
  std::optional<double> win_g_gt_s;
  std::optional<double> win_g_gt_g;
  double win_G_gt_S = 0.0;
  double win_G_gt_N = 0.0;
  double win_S_gt_N = 0.0;
  std::optional<double> gen_at_k;
  double mrr_gold = 0.0;
  double ndcg_at_3 = 0.0;
  double ndcg_at_5 = 0.0;
  double ndcg_at_10 = 0.0;
  std::optional<double> fid;
  std::optional<double> diversity;
  std::int64_t n_groups = 0;
  Json config = Json::object();

  Json to_json() const;
  static MetricsReport from_json(const Json& j);
};

/// Ranking part of a report. Win rates involving the generated set and Gen@K
/// stay empty when no group carries generated candidates.
MetricsReport ranking_metrics(std::span<const GroupScores> groups, int k,
                              GeneratedAggregate aggregate, bool exponential_gain = false);

}  // namespace reactpref
