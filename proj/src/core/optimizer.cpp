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

#include "reactpref/core/optimizer.hpp"

#include <cmath>
#include <numbers>

#include "reactpref/core/error.hpp"

namespace reactpref {

double scheduled_learning_rate(const OptimizerConfig& cfg, std::int64_t step) {
  if (cfg.warmup_steps > 0 && step < cfg.warmup_steps)
    return cfg.learning_rate * static_cast<double>(step + 1) /
           static_cast<double>(cfg.warmup_steps);
  const std::int64_t decay_span = cfg.total_steps - cfg.warmup_steps;
  if (decay_span <= 0) return cfg.learning_rate;
  const double progress =
      std::min(1.0, static_cast<double>(step - cfg.warmup_steps) / static_cast<double>(decay_span));
  return cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

AdamW::AdamW(std::size_t parameter_count) : m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

void AdamW::step(std::span<double> params, std::span<const double> grad,
                 const OptimizerConfig& cfg, double learning_rate) {
  require(params.size() == m_.size() && grad.size() == m_.size(), ErrorKind::InvalidArgument,
          "optimizer state does not match the parameter vector");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg.beta1 * m_[i] + (1.0 - cfg.beta1) * grad[i];
    v_[i] = cfg.beta2 * v_[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= learning_rate * (m_hat / (std::sqrt(v_hat) + cfg.epsilon) +
                                  cfg.weight_decay * params[i]);
  }
}

void AdamW::restore(std::vector<double> m, std::vector<double> v, std::int64_t t) {
  require(m.size() == v.size(), ErrorKind::InvalidArgument, "moment sizes differ");
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

}  // namespace reactpref
