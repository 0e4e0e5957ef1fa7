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

#include <Eigen/Dense>

#include "reactpref/core/metrics.hpp"
#include "reactpref/core/rng.hpp"

namespace reactpref::oracle {

// Reference implementations written by direct enumeration. They deliberately
// avoid the sorting and ranking helpers of the metrics module.

/// 1 + number of candidates that beat candidate `i` (higher score, or equal
/// score and a smaller id).
int rank_by_counting(std::span<const ScoredCandidate> pool, std::size_t i);

/// Eigenvalues and eigenvectors (columns) of a symmetric matrix by cyclic Jacobi sweeps.
void jacobi_eigen(const Eigen::MatrixXd& sym, Eigen::VectorXd& values, Eigen::MatrixXd& vectors);

double frechet_distance(const Eigen::VectorXd& mu_r, const Eigen::MatrixXd& cov_r,
                        const Eigen::VectorXd& mu_g, const Eigen::MatrixXd& cov_g);

struct FeatureSets {
  std::vector<Eigen::VectorXd> real;
  std::vector<Eigen::VectorXd> generated;
  int diversity_subset = 32;
};

/// Full reference report. `rng` drives the diversity draw exactly as the
/// evaluation path does; FID and diversity stay empty when there are too few
/// features.
MetricsReport brute_force_metrics(std::span<const GroupScores> groups, int k,
                                  GeneratedAggregate aggregate, const FeatureSets* features,
                                  Rng* rng, bool exponential_gain = false);

}  // namespace reactpref::oracle
