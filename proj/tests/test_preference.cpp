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

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "reactpref/core/error.hpp"
#include "reactpref/core/numeric.hpp"
#include "reactpref/core/preference.hpp"
#include "reactpref/core/synthetic.hpp"
#include "support.hpp"

using namespace reactpref;
using namespace reactpref::testing;

namespace {

const VocabSpec kVocab = small_vocab();

WorldConfig tiny_world() {
  WorldConfig w;
  w.n_concepts = 3;
  w.groups_per_split = {12, 2, 2};
  w.candidates_per_tier = {1, 2, 3};
  w.motions_per_anchor = 4;
  w.text_vocab = w.audio_vocab = w.motion_vocab = 12;
  w.emotion_vocab = 3;
  w.feature_dim = 4;
  return w;
}

PreferenceConfig quick_config() {
  PreferenceConfig c;
  c.optimizer.total_steps = 10;
  c.optimizer.warmup_steps = 2;
  c.optimizer.batch_size = 2;
  c.optimizer.grad_accumulation = 1;
  return c;
}

}  // namespace

TEST_SUITE("aggregate_tier") {
  TEST_CASE("examples") {
    const double one[] = {-1.7};
    CHECK(aggregate_tier(one) == -1.7);
    const double same[] = {-0.3, -0.3};
    CHECK(aggregate_tier(same) == doctest::Approx(-0.3).epsilon(1e-15));
    const double mixed[] = {0.0, std::log(0.5)};
    CHECK(aggregate_tier(mixed) == doctest::Approx(std::log(0.75)).epsilon(1e-15));
    CHECK_THROWS_AS(aggregate_tier(std::span<const double>()), Error);
  }

  TEST_CASE("stable for very negative inputs") {
    const double xs[] = {-1000.0, -1001.0};
    CHECK(std::isfinite(aggregate_tier(xs)));
  }

  TEST_CASE("property: bounded by min and max, order invariant") {
    Rng rng(1);
    for (int i = 0; i < 500; ++i) {
      std::vector<double> xs(1 + rng.index(6));
      for (double& x : xs) x = -5.0 * rng.uniform();
      const double a = aggregate_tier(xs);
      CHECK(a >= *std::min_element(xs.begin(), xs.end()) - 1e-12);
      CHECK(a <= *std::max_element(xs.begin(), xs.end()) + 1e-12);
      std::reverse(xs.begin(), xs.end());
      CHECK(aggregate_tier(xs) == doctest::Approx(a).epsilon(1e-14));
    }
  }
}

TEST_SUITE("ranking_loss") {
  TEST_CASE("examples") {
    CHECK(std::abs(ranking_loss({-2, -2, -2}, 0.0, 0.25) - 2.25 * std::log(2.0)) <= 1e-12);
    CHECK(ranking_loss({0, -1e3, -2e3}, 0.5, 0.25) < 1e-300);
    CHECK(ranking_loss({1, 0, -1}, 0.5, 0.25) == doctest::Approx(0.99851).epsilon(1e-5));
  }

  TEST_CASE("property: positive, decreasing in the gaps, increasing in the margin") {
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
      const TierScores t{rng.normal(), rng.normal(), rng.normal()};
      const double m = rng.uniform(), lg = rng.uniform();
      const double base = ranking_loss(t, m, lg);
      CHECK(base > 0.0);
      CHECK(ranking_loss({t.gold + 0.1, t.silver, t.negative}, m, lg) < base);
      CHECK(ranking_loss({t.gold, t.silver, t.negative - 0.1}, m, lg) < base);
      CHECK(ranking_loss(t, m + 0.1, lg) > base);
    }
  }

  TEST_CASE("gradient matches central differences") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
      TierScores t{rng.normal(), rng.normal(), rng.normal()};
      const double m = rng.uniform(), lg = rng.uniform();
      const TierScores g = ranking_loss_gradient(t, m, lg);
      std::vector<double> v = {t.gold, t.silver, t.negative};
      const auto numeric = numeric_gradient(v, [&] { return ranking_loss({v[0], v[1], v[2]}, m, lg); });
      const double analytic[] = {g.gold, g.silver, g.negative};
      CHECK(max_relative_error(analytic, numeric) < 1e-6);
    }
  }
}

TEST_SUITE("total_objective") {
  TEST_CASE("lambda_rank = 0 is the weighted mean of -l_G") {
    Rng rng(4);
    const ModelParams p = random_model(kVocab, 3, 0.8, rng);
    const auto groups = random_weighted_groups(kVocab, rng, 4);
    PreferenceConfig cfg;
    cfg.lambda_rank = 0.0;
    double num = 0.0, den = 0.0;
    for (const auto& g : groups) {
      num += g.weight * -group_tier_scores(p, g.group).gold;
      den += g.weight;
    }
    CHECK(total_objective(groups, p, cfg) == doctest::Approx(num / den).epsilon(1e-13));
  }

  TEST_CASE("two-group fixture with weights (1, 0.5) matches a hand composition") {
    Rng rng(5);
    const ModelParams p = random_model(kVocab, 3, 0.8, rng);
    auto groups = random_weighted_groups(kVocab, rng, 2);
    groups[0].weight = 1.0;
    groups[1].weight = 0.5;
    PreferenceConfig cfg;
    double expected = 0.0;
    for (const auto& wg : groups) {
      double tiers[3];
      for (Tier t : kTiers) {
        double acc = 0.0;
        int n = 0;
        for (const auto* c : wg.group.tier(t)) {
          acc += std::exp(sequence_loglik(p, wg.group.condition, c->motion));
          ++n;
        }
        tiers[static_cast<int>(t)] = std::log(acc / n);
      }
      const double rank = softplus(cfg.margin - (tiers[0] - tiers[1])) +
                          softplus(cfg.margin - (tiers[1] - tiers[2])) +
                          cfg.lambda_gn * softplus(cfg.margin - (tiers[0] - tiers[2]));
      expected += wg.weight * (-tiers[0] + cfg.lambda_rank * rank);
    }
    expected /= 1.5;
    CHECK(total_objective(groups, p, cfg) == doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("property: uniform rescaling of weights changes nothing") {
    Rng rng(6);
    const ModelParams p = random_model(kVocab, 3, 0.8, rng);
    auto groups = random_weighted_groups(kVocab, rng, 3);
    const PreferenceConfig cfg;
    const double before = total_objective(groups, p, cfg);
    const ModelGradient gb = objective_gradient(groups, p, cfg);
    for (auto& g : groups) g.weight *= 2.0;
    CHECK(total_objective(groups, p, cfg) == doctest::Approx(before).epsilon(1e-14));
    const ModelGradient ga = objective_gradient(groups, p, cfg);
    for (std::size_t i = 0; i < ga.values().size(); ++i)
      CHECK(ga.values()[i] == doctest::Approx(gb.values()[i]).epsilon(1e-12));
  }

  TEST_CASE("errors: missing tier, zero weight sum") {
    Rng rng(7);
    const ModelParams p = random_model(kVocab, 2, 0.5, rng);
    auto groups = random_weighted_groups(kVocab, rng, 1);
    const PreferenceConfig cfg;
    auto missing = groups;
    std::erase_if(missing[0].group.candidates, [](const Candidate& c) { return c.tier == Tier::Silver; });
    CHECK_THROWS_AS(total_objective(missing, p, cfg), Error);
    auto zero = groups;
    zero[0].weight = 0.0;
    CHECK_THROWS_AS(total_objective(zero, p, cfg), Error);
  }
}

TEST_SUITE("objective_gradient") {
  TEST_CASE("single Gold with lambda_rank = 0 equals the negated loglik gradient") {
    Rng rng(8);
    const ModelParams p = random_model(kVocab, 3, 0.8, rng);
    Group g;
    g.group_id = "g";
    g.condition = random_condition(kVocab, rng, Mode::all());
    g.candidates = {{random_motion(kVocab, rng, "a"), Tier::Gold},
                    {random_motion(kVocab, rng, "b"), Tier::Silver},
                    {random_motion(kVocab, rng, "c"), Tier::Negative}};
    const std::vector<WeightedGroup> groups = {{g, 0.7}};
    PreferenceConfig cfg;
    cfg.lambda_rank = 0.0;
    const ModelGradient og = objective_gradient(groups, p, cfg);
    const ModelGradient lg = loglik_gradient(p, g.condition, g.candidates[0].motion);
    for (std::size_t i = 0; i < og.values().size(); ++i)
      CHECK(og.values()[i] == doctest::Approx(-lg.values()[i]).epsilon(1e-13));
  }

  TEST_CASE("matches central differences") {
    Rng rng(9);
    for (int i = 0; i < 20; ++i) {
      ModelParams p = random_model(kVocab, 2, 0.8, rng);
      const auto groups = random_weighted_groups(kVocab, rng, 2);
      PreferenceConfig cfg;
      cfg.lambda_rank = 0.1 + rng.uniform();
      const auto numeric = numeric_gradient(p.values(), [&] { return total_objective(groups, p, cfg); });
      CHECK(max_relative_error(objective_gradient(groups, p, cfg).values(), numeric) < 1e-4);
    }
  }

  TEST_CASE("cross-entropy ablation ignores weights and non-Gold tiers") {
    Rng rng(10);
    const ModelParams p = random_model(kVocab, 2, 0.8, rng);
    auto groups = random_weighted_groups(kVocab, rng, 2);
    PreferenceConfig cfg;
    cfg.objective = TrainingObjective::CrossEntropy;
    double expected = 0.0;
    for (const auto& g : groups)
      expected -= sequence_loglik(p, g.group.condition, g.group.tier(Tier::Gold).front()->motion) / 2.0;
    CHECK(total_objective(groups, p, cfg) == doctest::Approx(expected).epsilon(1e-13));
    groups[0].weight *= 10.0;
    CHECK(total_objective(groups, p, cfg) == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_SUITE("modality dropout") {
  TEST_CASE("p = 0 is the identity") {
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
      const Condition c = random_condition(kVocab, rng, evaluation_modes()[rng.index(6)]);
      CHECK(apply_modality_dropout(c, 0.0, rng, kVocab) == c);
    }
  }

  TEST_CASE("p = 1 keeps exactly one modality") {
    Rng rng(12);
    for (int i = 0; i < 300; ++i) {
      const Condition c = random_condition(kVocab, rng, evaluation_modes()[rng.index(6)]);
      const Condition d = apply_modality_dropout(c, 1.0, rng, kVocab);
      CHECK(d.mode.size() == 1);
      CHECK(c.mode.contains(*std::find_if(kModalities.begin(), kModalities.end(),
                                          [&](Modality m) { return d.mode.contains(m); })));
    }
  }

  TEST_CASE("p = 0.3 drop rates match the exact guarded process") {
    const double p = 0.3;
    // Enumerate the 2^3 independent outcomes; the all-dropped outcome keeps one at random.
    double exact = 0.0;  // probability that a given modality ends up dropped
    for (int kept = 0; kept < 8; ++kept) {
      double prob = 1.0;
      for (int m = 0; m < 3; ++m) prob *= (kept >> m & 1) ? 1.0 - p : p;
      if (kept == 0) exact += prob * 2.0 / 3.0;
      else if (!(kept & 1)) exact += prob;
    }
    Rng rng(13);
    const Condition c = make_condition(kVocab, {8}, {13}, 18, Mode::all());
    const int trials = 10000;
    std::array<int, 3> dropped{};
    for (int i = 0; i < trials; ++i) {
      const Condition d = apply_modality_dropout(c, p, rng, kVocab);
      for (int m = 0; m < 3; ++m) dropped[m] += !d.mode.contains(kModalities[m]);
    }
    const double sigma = std::sqrt(trials * exact * (1.0 - exact));
    for (int m = 0; m < 3; ++m) CHECK(std::abs(dropped[m] - trials * exact) <= 3.0 * sigma);
  }
}

TEST_SUITE("train_preference") {
  TEST_CASE("stopping at step 0 leaves parameters unchanged") {
    const PlantedWorld w = generate_world(tiny_world());
    Rng init(1);
    const ModelParams p = init_model(w.vocab, 4, 0.1, init);
    const auto run = train_preference(PreferenceTrainingState::fresh(p), w.dataset, quick_config(), 3, 0);
    CHECK(run.state.params == p);
    CHECK(run.log.empty());
  }

  TEST_CASE("fixed seed is bit-identical; resuming matches an uninterrupted run") {
    const PlantedWorld w = generate_world(tiny_world());
    Rng init(2);
    const auto fresh = PreferenceTrainingState::fresh(init_model(w.vocab, 4, 0.1, init));
    const PreferenceConfig cfg = quick_config();
    const auto a = train_preference(fresh, w.dataset, cfg, 5);
    const auto b = train_preference(fresh, w.dataset, cfg, 5);
    CHECK(a.state.params == b.state.params);
    CHECK(a.state.step == 10);
    CHECK(a.log.size() == 10);

    const auto half = train_preference(fresh, w.dataset, cfg, 5, 4);
    const auto rest = train_preference(half.state, w.dataset, cfg, 5);
    CHECK(rest.state.params == a.state.params);
    CHECK(rest.state.optimizer == a.state.optimizer);
  }

  TEST_CASE("log carries finite losses and tier means") {
    const PlantedWorld w = generate_world(tiny_world());
    Rng init(3);
    const auto run = train_preference(PreferenceTrainingState::fresh(init_model(w.vocab, 4, 0.1, init)),
                                      w.dataset, quick_config(), 1);
    for (const auto& e : run.log) {
      CHECK(std::isfinite(e.loss));
      CHECK(e.tiers.gold <= 0.0);
      CHECK(e.grad_norm >= 0.0);
    }
    CHECK(to_jsonl(run.log).find("\"l_G\"") != std::string::npos);
  }

  TEST_CASE("invalid configuration is rejected") {
    PreferenceConfig c;
    c.margin = -1.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = PreferenceConfig{};
    c.modality_dropout_p = 1.5;
    CHECK_THROWS_AS(c.validate(), Error);
  }
}

TEST_SUITE("optimizer") {
  TEST_CASE("schedule warms up linearly then decays to zero") {
    OptimizerConfig c;
    c.learning_rate = 1.0;
    c.warmup_steps = 10;
    c.total_steps = 110;
    CHECK(scheduled_learning_rate(c, 0) == doctest::Approx(0.1));
    CHECK(scheduled_learning_rate(c, 9) == doctest::Approx(1.0));
    CHECK(scheduled_learning_rate(c, 60) == doctest::Approx(0.5).epsilon(0.02));
    CHECK(scheduled_learning_rate(c, 110) == doctest::Approx(0.0));
  }

  TEST_CASE("AdamW minimizes a quadratic") {
    std::vector<double> x = {3.0, -2.0};
    AdamW opt(2);
    OptimizerConfig c;
    for (int i = 0; i < 2000; ++i) {
      const std::vector<double> g = {2.0 * x[0], 2.0 * x[1]};
      opt.step(x, g, c, 0.05);
    }
    CHECK(std::abs(x[0]) < 1e-3);
    CHECK(std::abs(x[1]) < 1e-3);
    CHECK(opt.steps_taken() == 2000);
  }
}
