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

#include "reactpref/core/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace reactpref {

const char* origin_name(Origin origin) noexcept {
  switch (origin) {
    case Origin::Gold: return "gold";
    case Origin::Silver: return "silver";
    case Origin::Negative: return "negative";
    case Origin::Generated: return "generated";
  }
  return "?";
}

Origin origin_of(Tier tier) noexcept { return static_cast<Origin>(tier); }

const char* aggregate_name(GeneratedAggregate a) noexcept {
  return a == GeneratedAggregate::Mean ? "mean" : "best";
}

GeneratedAggregate parse_aggregate(std::string_view name) {
  if (name == "mean") return GeneratedAggregate::Mean;
  if (name == "best") return GeneratedAggregate::Best;
  fail(ErrorKind::Config, "unknown generated aggregate '" + std::string(name) +
                              "' (expected mean or best)");
}

std::optional<double> GroupScores::mean(Origin origin) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : candidates)
    if (c.origin == origin) {
      sum += c.score;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::optional<double> GroupScores::best(Origin origin) const {
  std::optional<double> out;
  for (const auto& c : candidates)
    if (c.origin == origin && (!out || c.score > *out)) out = c.score;
  return out;
}

std::size_t GroupScores::count(Origin origin) const {
  return static_cast<std::size_t>(std::count_if(
      candidates.begin(), candidates.end(), [&](const auto& c) { return c.origin == origin; }));
}

double GroupScores::side(Origin origin, GeneratedAggregate aggregate) const {
  const std::optional<double> v = (origin == Origin::Generated && aggregate == GeneratedAggregate::Best)
                                      ? best(origin)
                                      : mean(origin);
  require(v.has_value(), ErrorKind::InvalidArgument,
          "group '" + group_id + "' has no " + origin_name(origin) + " candidates");
  return *v;
}

double kappa(double u, double v) {
  require(std::isfinite(u) && std::isfinite(v), ErrorKind::InvalidArgument,
          "kappa needs finite scores");
  if (u > v) return 1.0;
  if (u == v) return 0.5;
  return 0.0;
}

double win_rate(std::span<const GroupScores> groups, Origin left, Origin right,
                GeneratedAggregate aggregate) {
  require(!groups.empty(), ErrorKind::InvalidArgument, "win rate over zero groups");
  double total = 0.0;
  for (const auto& g : groups) total += kappa(g.side(left, aggregate), g.side(right, aggregate));
  return total / static_cast<double>(groups.size());
}

std::vector<RankedCandidate> rank_group(std::span<const ScoredCandidate> scores) {
  std::vector<RankedCandidate> out;
  out.reserve(scores.size());
  for (const auto& s : scores) out.push_back({s, 0});
  std::sort(out.begin(), out.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.candidate.score != b.candidate.score) return a.candidate.score > b.candidate.score;
    return a.candidate.id < b.candidate.id;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i) + 1;
  return out;
}

int gen_at_k(const GroupScores& group, int k) {
  require(k >= 1, ErrorKind::InvalidArgument, "Gen@K needs k >= 1");
  require(group.count(Origin::Generated) > 0, ErrorKind::InvalidArgument,
          "group '" + group.group_id + "' has no generated candidates");
  for (const auto& r : rank_group(group.candidates))
    if (r.candidate.origin == Origin::Generated) return r.rank <= k ? 1 : 0;
  return 0;
}

double gen_at_k_rate(std::span<const GroupScores> groups, int k) {
  require(!groups.empty(), ErrorKind::InvalidArgument, "Gen@K over zero groups");
  double hits = 0.0;
  for (const auto& g : groups) hits += gen_at_k(g, k);
  return hits / static_cast<double>(groups.size());
}

namespace {

std::vector<ScoredCandidate> annotated(const GroupScores& group) {
  std::vector<ScoredCandidate> out;
  for (const auto& c : group.candidates)
    if (c.origin != Origin::Generated) out.push_back(c);
  return out;
}

}  // namespace

double reciprocal_gold_rank(const GroupScores& group) {
  for (const auto& r : rank_group(annotated(group)))
    if (r.candidate.origin == Origin::Gold) return 1.0 / r.rank;
  fail(ErrorKind::InvalidArgument, "group '" + group.group_id + "' has no Gold candidate");
}

double mrr_gold(std::span<const GroupScores> groups) {
  require(!groups.empty(), ErrorKind::InvalidArgument, "MRR over zero groups");
  double total = 0.0;
  for (const auto& g : groups) total += reciprocal_gold_rank(g);
  return total / static_cast<double>(groups.size());
}

namespace {

double gain(Tier t, bool exponential) {
  const double rel = t == Tier::Gold ? 2.0 : (t == Tier::Silver ? 1.0 : 0.0);
  return exponential ? std::exp2(rel) - 1.0 : rel;
}

double dcg(std::span<const Tier> ranked, int k, bool exponential) {
  double out = 0.0;
  const std::size_t n = std::min(ranked.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i)
    out += gain(ranked[i], exponential) / std::log2(static_cast<double>(i) + 2.0);
  return out;
}

}  // namespace

double ndcg_at_k(std::span<const Tier> ranked, int k, bool exponential_gain) {
  require(!ranked.empty(), ErrorKind::InvalidArgument, "nDCG of an empty group");
  require(k >= 1, ErrorKind::InvalidArgument, "nDCG needs k >= 1");
  std::vector<Tier> ideal(ranked.begin(), ranked.end());
  std::sort(ideal.begin(), ideal.end());
  const double idcg = dcg(ideal, k, exponential_gain);
  if (idcg == 0.0) return 0.0;
  return dcg(ranked, k, exponential_gain) / idcg;
}

double group_ndcg(const GroupScores& group, int k, bool exponential_gain) {
  std::vector<Tier> tiers;
  for (const auto& r : rank_group(annotated(group)))
    tiers.push_back(static_cast<Tier>(r.candidate.origin));
  return ndcg_at_k(tiers, k, exponential_gain);
}

double mean_ndcg(std::span<const GroupScores> groups, int k, bool exponential_gain) {
  require(!groups.empty(), ErrorKind::InvalidArgument, "nDCG over zero groups");
  double total = 0.0;
  for (const auto& g : groups) total += group_ndcg(g, k, exponential_gain);
  return total / static_cast<double>(groups.size());
}

Gaussian estimate_gaussian(std::span<const Eigen::VectorXd> features) {
  require(features.size() >= 2, ErrorKind::InvalidArgument,
          "a Gaussian estimate needs at least two samples");
  const Eigen::Index d = features.front().size();
  Gaussian g{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
  for (const auto& f : features) {
    require(f.size() == d, ErrorKind::InvalidArgument, "feature dimensions differ");
    g.mean += f;
  }
  g.mean /= static_cast<double>(features.size());
  for (const auto& f : features) {
    const Eigen::VectorXd c = f - g.mean;
    g.cov.noalias() += c * c.transpose();
  }
  g.cov /= static_cast<double>(features.size() - 1);
  return g;
}

namespace {

constexpr double kPsdTolerance = 1e-8;

void check_covariance(const Eigen::MatrixXd& cov, const char* which) {
  require(cov.rows() == cov.cols(), ErrorKind::InvalidArgument,
          std::string(which) + " covariance is not square");
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  require((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
          ErrorKind::InvalidArgument, std::string(which) + " covariance is not symmetric");
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* which) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  require(eig.info() == Eigen::Success, ErrorKind::Numeric,
          std::string("eigendecomposition failed for ") + which);
  Eigen::VectorXd vals = eig.eigenvalues();
  require(vals.size() == 0 || vals.minCoeff() >= -kPsdTolerance, ErrorKind::InvalidArgument,
          std::string(which) + " is not positive semi-definite");
  vals = vals.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const Eigen::VectorXd& mu_r, const Eigen::MatrixXd& cov_r,
                        const Eigen::VectorXd& mu_g, const Eigen::MatrixXd& cov_g) {
  const Eigen::Index d = mu_r.size();
  require(mu_g.size() == d && cov_r.rows() == d && cov_g.rows() == d, ErrorKind::InvalidArgument,
          "Gaussian dimensions differ");
  require(mu_r.allFinite() && mu_g.allFinite() && cov_r.allFinite() && cov_g.allFinite(),
          ErrorKind::InvalidArgument, "non-finite Gaussian parameters");
  check_covariance(cov_r, "real");
  check_covariance(cov_g, "generated");
  const Eigen::MatrixXd root_r = psd_sqrt(cov_r, "real covariance");
  // Only the generated covariance's PSD check is needed here; the root is unused.
  psd_sqrt(cov_g, "generated covariance");
  Eigen::MatrixXd inner = root_r * cov_g * root_r;
  inner = 0.5 * (inner + inner.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner, Eigen::EigenvaluesOnly);
  require(eig.info() == Eigen::Success, ErrorKind::Numeric, "eigendecomposition failed");
  const double cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value =
      (mu_r - mu_g).squaredNorm() + cov_r.trace() + cov_g.trace() - 2.0 * cross;
  require(value >= -kPsdTolerance, ErrorKind::Numeric, "negative Frechet distance");
  return std::max(0.0, value);
}

double frechet_distance(const Gaussian& real, const Gaussian& generated) {
  return frechet_distance(real.mean, real.cov, generated.mean, generated.cov);
}

double mean_pair_distance(std::span<const Eigen::VectorXd> left,
                          std::span<const Eigen::VectorXd> right) {
  require(!left.empty() && left.size() == right.size(), ErrorKind::InvalidArgument,
          "pair lists must be non-empty and of equal length");
  double total = 0.0;
  for (std::size_t i = 0; i < left.size(); ++i) total += (left[i] - right[i]).norm();
  return total / static_cast<double>(left.size());
}

double diversity(std::span<const Eigen::VectorXd> features, int subset_size, Rng& rng) {
  require(subset_size >= 1, ErrorKind::InvalidArgument, "diversity subset size must be >= 1");
  const auto s = static_cast<std::size_t>(subset_size);
  require(features.size() >= 2 * s, ErrorKind::InvalidArgument,
          "diversity needs " + std::to_string(2 * s) + " features, got " +
              std::to_string(features.size()));
  const auto picks = rng.sample_without_replacement(features.size(), 2 * s);
  std::vector<Eigen::VectorXd> a, b;
  for (std::size_t i = 0; i < s; ++i) {
    a.push_back(features[picks[i]]);
    b.push_back(features[picks[s + i]]);
  }
  return mean_pair_distance(a, b);
}

namespace {

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> read_opt(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

}  // namespace

Json MetricsReport::to_json() const {
  return Json{{"win_g_gt_n", opt(win_g_gt_n)},
              {"win_g_gt_s", opt(win_g_gt_s)},
              {"win_g_gt_g", opt(win_g_gt_g)},
              {"win_G_gt_S", win_G_gt_S},
              {"win_G_gt_N", win_G_gt_N},
              {"win_S_gt_N", win_S_gt_N},
              {"gen_at_k", opt(gen_at_k)},
              {"mrr_gold", mrr_gold},
              {"ndcg_at_3", ndcg_at_3},
              {"ndcg_at_5", ndcg_at_5},
              {"ndcg_at_10", ndcg_at_10},
              {"fid", opt(fid)},
              {"diversity", opt(diversity)},
              {"n_groups", n_groups},
              {"config", config}};
}

MetricsReport MetricsReport::from_json(const Json& j) {
  expect_object(j, "report");
  reject_unknown_keys(j,
                      {"win_g_gt_n", "win_g_gt_s", "win_g_gt_g", "win_G_gt_S", "win_G_gt_N",
                       "win_S_gt_N", "gen_at_k", "mrr_gold", "ndcg_at_3", "ndcg_at_5",
                       "ndcg_at_10", "fid", "diversity", "n_groups", "config"},
                      "report");
  MetricsReport r;
  try {
    r.win_g_gt_n = read_opt(j, "win_g_gt_n");
    r.win_g_gt_s = read_opt(j, "win_g_gt_s");
    r.win_g_gt_g = read_opt(j, "win_g_gt_g");
    r.win_G_gt_S = j.at("win_G_gt_S").get<double>();
    r.win_G_gt_N = j.at("win_G_gt_N").get<double>();
    r.win_S_gt_N = j.at("win_S_gt_N").get<double>();
    r.gen_at_k = read_opt(j, "gen_at_k");
    r.mrr_gold = j.at("mrr_gold").get<double>();
    r.ndcg_at_3 = j.at("ndcg_at_3").get<double>();
    r.ndcg_at_5 = j.at("ndcg_at_5").get<double>();
    r.ndcg_at_10 = j.at("ndcg_at_10").get<double>();
    r.fid = read_opt(j, "fid");
    r.diversity = read_opt(j, "diversity");
    r.n_groups = j.at("n_groups").get<std::int64_t>();
    r.config = j.value("config", Json::object());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("malformed report: ") + e.what());
  }
  return r;
}

MetricsReport ranking_metrics(std::span<const GroupScores> groups, int k,
                              GeneratedAggregate aggregate, bool exponential_gain) {
  require(!groups.empty(), ErrorKind::InvalidArgument, "no groups to evaluate");
  MetricsReport r;
  r.n_groups = static_cast<std::int64_t>(groups.size());
  r.win_G_gt_S = win_rate(groups, Origin::Gold, Origin::Silver);
  r.win_G_gt_N = win_rate(groups, Origin::Gold, Origin::Negative);
  r.win_S_gt_N = win_rate(groups, Origin::Silver, Origin::Negative);
  const bool generated = std::all_of(groups.begin(), groups.end(), [](const GroupScores& g) {
    return g.count(Origin::Generated) > 0;
  });
  if (generated) {
    r.win_g_gt_n = win_rate(groups, Origin::Generated, Origin::Negative, aggregate);
    r.win_g_gt_s = win_rate(groups, Origin::Generated, Origin::Silver, aggregate);
    r.win_g_gt_g = win_rate(groups, Origin::Generated, Origin::Gold, aggregate);
    r.gen_at_k = gen_at_k_rate(groups, k);
  }
  r.mrr_gold = mrr_gold(groups);
  r.ndcg_at_3 = mean_ndcg(groups, 3, exponential_gain);
  r.ndcg_at_5 = mean_ndcg(groups, 5, exponential_gain);
  r.ndcg_at_10 = mean_ndcg(groups, 10, exponential_gain);
  return r;
}

}  // namespace reactpref
