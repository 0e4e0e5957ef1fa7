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

#include "reactpref/core/oracle.hpp"

#include <cmath>

namespace reactpref::oracle {

int rank_by_counting(std::span<const ScoredCandidate> pool, std::size_t i) {
  int rank = 1;
  for (std::size_t j = 0; j < pool.size(); ++j) {
    if (j == i) continue;
    const bool beats = pool[j].score > pool[i].score ||
                       (pool[j].score == pool[i].score && pool[j].id < pool[i].id);
    if (beats) ++rank;
  }
  return rank;
}

void jacobi_eigen(const Eigen::MatrixXd& sym, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  const Eigen::Index n = sym.rows();
  Eigen::MatrixXd a = sym;
  vectors = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = vectors(k, p), vkq = vectors(k, q);
          vectors(k, p) = c * vkp - s * vkq;
          vectors(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  values = a.diagonal();
}

namespace {

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
  Eigen::VectorXd vals;
  Eigen::MatrixXd vecs;
  jacobi_eigen(m, vals, vecs);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    const double r = vals[i] > 0.0 ? std::sqrt(vals[i]) : 0.0;
    out += r * vecs.col(i) * vecs.col(i).transpose();
  }
  return out;
}

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

Moments moments(const std::vector<Eigen::VectorXd>& xs) {
  const Eigen::Index d = xs.front().size();
  const double n = static_cast<double>(xs.size());
  Moments m{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
  for (const auto& x : xs) m.mean += x / n;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      double s = 0.0;
      for (const auto& x : xs) s += (x[i] - m.mean[i]) * (x[j] - m.mean[j]);
      m.cov(i, j) = s / (n - 1.0);
    }
  return m;
}

double mean_of(const GroupScores& g, Origin o) {
  double sum = 0.0;
  int n = 0;
  for (const auto& c : g.candidates)
    if (c.origin == o) {
      sum += c.score;
      ++n;
    }
  require(n > 0, ErrorKind::InvalidArgument, "group is missing a partition");
  return sum / n;
}

double generated_side(const GroupScores& g, GeneratedAggregate agg) {
  if (agg == GeneratedAggregate::Mean) return mean_of(g, Origin::Generated);
  double best = -INFINITY;
  for (const auto& c : g.candidates)
    if (c.origin == Origin::Generated && c.score > best) best = c.score;
  return best;
}

double kappa_ref(double u, double v) { return u > v ? 1.0 : (u == v ? 0.5 : 0.0); }

double relevance(Origin o, bool exponential) {
  const double rel = o == Origin::Gold ? 2.0 : (o == Origin::Silver ? 1.0 : 0.0);
  return exponential ? std::pow(2.0, rel) - 1.0 : rel;
}

double ndcg_ref(const GroupScores& g, int k, bool exponential) {
  std::vector<ScoredCandidate> pool;
  for (const auto& c : g.candidates)
    if (c.origin != Origin::Generated) pool.push_back(c);
  // Gains placed by rank, then summed in rank order.
  std::vector<double> by_rank(pool.size() + 1, 0.0);
  for (std::size_t i = 0; i < pool.size(); ++i)
    by_rank[static_cast<std::size_t>(rank_by_counting(pool, i))] =
        relevance(pool[i].origin, exponential);
  double dcg = 0.0;
  for (int r = 1; r <= k && r <= static_cast<int>(pool.size()); ++r)
    dcg += by_rank[static_cast<std::size_t>(r)] / std::log2(r + 1.0);

  int counts[3] = {0, 0, 0};
  for (const auto& c : pool) ++counts[static_cast<int>(c.origin)];
  double idcg = 0.0;
  int r = 1;
  for (int t = 0; t < 3; ++t)
    for (int c = 0; c < counts[t] && r <= k; ++c, ++r)
      idcg += relevance(static_cast<Origin>(t), exponential) / std::log2(r + 1.0);
  return idcg == 0.0 ? 0.0 : dcg / idcg;
}

}  // namespace

double frechet_distance(const Eigen::VectorXd& mu_r, const Eigen::MatrixXd& cov_r,
                        const Eigen::VectorXd& mu_g, const Eigen::MatrixXd& cov_g) {
  const Eigen::MatrixXd root = sqrt_psd(cov_r);
  const Eigen::MatrixXd inner = root * cov_g * root;
  Eigen::VectorXd vals;
  Eigen::MatrixXd vecs;
  jacobi_eigen(0.5 * (inner + inner.transpose()), vals, vecs);
  double cross = 0.0;
  for (Eigen::Index i = 0; i < vals.size(); ++i) cross += vals[i] > 0.0 ? std::sqrt(vals[i]) : 0.0;
  double diff = 0.0;
  for (Eigen::Index i = 0; i < mu_r.size(); ++i) diff += (mu_r[i] - mu_g[i]) * (mu_r[i] - mu_g[i]);
  const double v = diff + cov_r.trace() + cov_g.trace() - 2.0 * cross;
  return v < 0.0 ? 0.0 : v;
}

MetricsReport brute_force_metrics(std::span<const GroupScores> groups, int k,
                                  GeneratedAggregate aggregate, const FeatureSets* features,
                                  Rng* rng, bool exponential_gain) {
  MetricsReport r;
  const double n = static_cast<double>(groups.size());
  r.n_groups = static_cast<std::int64_t>(groups.size());
  bool generated = !groups.empty();
  for (const auto& g : groups) {
    bool any = false;
    for (const auto& c : g.candidates) any = any || c.origin == Origin::Generated;
    generated = generated && any;
  }

  double gs = 0, gn = 0, sn = 0, ggn = 0, ggs = 0, ggg = 0, hits = 0, mrr = 0, n3 = 0, n5 = 0,
         n10 = 0;
  for (const auto& g : groups) {
    const double G = mean_of(g, Origin::Gold), S = mean_of(g, Origin::Silver),
                 N = mean_of(g, Origin::Negative);
    gs += kappa_ref(G, S);
    gn += kappa_ref(G, N);
    sn += kappa_ref(S, N);
    if (generated) {
      const double x = generated_side(g, aggregate);
      ggn += kappa_ref(x, N);
      ggs += kappa_ref(x, S);
      ggg += kappa_ref(x, G);
      int best = INT32_MAX;
      for (std::size_t i = 0; i < g.candidates.size(); ++i)
        if (g.candidates[i].origin == Origin::Generated)
          best = std::min(best, rank_by_counting(g.candidates, i));
      hits += best <= k ? 1.0 : 0.0;
    }
    std::vector<ScoredCandidate> pool;
    for (const auto& c : g.candidates)
      if (c.origin != Origin::Generated) pool.push_back(c);
    int best_gold = INT32_MAX;
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (pool[i].origin == Origin::Gold) best_gold = std::min(best_gold, rank_by_counting(pool, i));
    require(best_gold != INT32_MAX, ErrorKind::InvalidArgument, "group without Gold");
    mrr += 1.0 / best_gold;
    n3 += ndcg_ref(g, 3, exponential_gain);
    n5 += ndcg_ref(g, 5, exponential_gain);
    n10 += ndcg_ref(g, 10, exponential_gain);
  }
  r.win_G_gt_S = gs / n;
  r.win_G_gt_N = gn / n;
  r.win_S_gt_N = sn / n;
  if (generated) {
    r.win_g_gt_n = ggn / n;
    r.win_g_gt_s = ggs / n;
    r.win_g_gt_g = ggg / n;
    r.gen_at_k = hits / n;
  }
  r.mrr_gold = mrr / n;
  r.ndcg_at_3 = n3 / n;
  r.ndcg_at_5 = n5 / n;
  r.ndcg_at_10 = n10 / n;

  if (features != nullptr) {
    if (features->real.size() >= 2 && features->generated.size() >= 2) {
      const Moments a = moments(features->real), b = moments(features->generated);
      r.fid = frechet_distance(a.mean, a.cov, b.mean, b.cov);
    }
    const std::size_t s = std::min<std::size_t>(static_cast<std::size_t>(features->diversity_subset),
                                                features->generated.size() / 2);
    if (s >= 1 && rng != nullptr) {
      const auto picks = rng->sample_without_replacement(features->generated.size(), 2 * s);
      double total = 0.0;
      for (std::size_t i = 0; i < s; ++i)
        total += (features->generated[picks[i]] - features->generated[picks[s + i]]).norm();
      r.diversity = total / static_cast<double>(s);
    }
  }
  return r;
}

}  // namespace reactpref::oracle
