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
#include <span>
#include <vector>

namespace reactpref {

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  std::int64_t warmup_steps = 100;
  std::int64_t total_steps = 2000;
  int batch_size = 8;
  int grad_accumulation = 2;
};

/// Linear warmup to the base rate, then cosine decay to zero at total_steps.
double scheduled_learning_rate(const OptimizerConfig& cfg, std::int64_t step);

/// Decoupled-weight-decay Adam over a flat parameter vector.
class AdamW {
 public:
  AdamW() = default;
  explicit AdamW(std::size_t parameter_count);

  /// Descends along `grad` (a gradient of the quantity being minimized).
  void step(std::span<double> params, std::span<const double> grad, const OptimizerConfig& cfg,
            double learning_rate);

  std::int64_t steps_taken() const { return t_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  void restore(std::vector<double> m, std::vector<double> v, std::int64_t t);

  friend bool operator==(const AdamW&, const AdamW&) = default;

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  std::int64_t t_ = 0;
};

}  // namespace reactpref
