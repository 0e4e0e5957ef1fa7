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

#include <cmath>

#include "reactpref/core/error.hpp"
#include "reactpref/core/judge.hpp"
#include "reactpref/core/synthetic.hpp"
#include "support.hpp"

using namespace reactpref;
using namespace reactpref::testing;

namespace {

const VocabSpec kVocab = small_vocab();

Eigen::VectorXd unit(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v.normalized();
}

/// Group whose candidates all share one motion, so every score is equal.
Group identical_candidates(Rng& rng, int n_gold, int n_other) {
  Group g;
  g.group_id = "same";
  g.condition = random_condition(kVocab, rng, Mode::all());
  const auto tokens = random_tokens(kVocab.motion, 2, 3, rng);
  for (int i = 0; i < n_gold + n_other; ++i)
    g.candidates.push_back({{tokens, "s" + std::to_string(i)}, i < n_gold ? Tier::Gold : Tier::Negative});
  return g;
}

}  // namespace

TEST_SUITE("encode_modality") {
  TEST_CASE("all-masked input is null with a zero vector") {
    Rng rng(1);
    const JudgeParams j = random_judge(kVocab, rng);
    const TokenId toks[] = {8, 9};
    const std::uint8_t mask[] = {0, 0};
    const BranchEncoding e = encode_modality(j.weights, Branch::Text, toks, mask);
    CHECK(e.null);
    CHECK(e.z.isZero());
  }

  TEST_CASE("single valid token pools to its embedding") {
    Rng rng(2);
    const JudgeParams j = random_judge(kVocab, rng);
    const TokenId toks[] = {10};
    const std::uint8_t mask[] = {1};
    const BranchEncoding e = encode_modality(j.weights, Branch::Text, toks, mask);
    REQUIRE(!e.null);
    const auto row = j.weights.embed(Branch::Text).row(j.weights.row_of(Branch::Text, 10));
    CHECK((e.pooled - row.transpose()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(e.z.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("property: permutation and masked padding leave the encoding unchanged") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
      const JudgeParams j = random_judge(kVocab, rng);
      std::vector<TokenId> toks = random_tokens(kVocab.audio, 1, 5, rng);
      std::vector<std::uint8_t> mask(toks.size(), 1);
      const BranchEncoding a = encode_modality(j.weights, Branch::Audio, toks, mask);
      std::reverse(toks.begin(), toks.end());
      const BranchEncoding b = encode_modality(j.weights, Branch::Audio, toks, mask);
      CHECK((a.z - b.z).cwiseAbs().maxCoeff() < 1e-12);
      toks.push_back(kVocab.audio.at(0));
      mask.push_back(0);
      const BranchEncoding c = encode_modality(j.weights, Branch::Audio, toks, mask);
      CHECK((a.z - c.z).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_SUITE("strict_l2_nullify") {
  TEST_CASE("inactive modalities are masked and the mode shrinks") {
    Rng rng(4);
    const Condition c = random_condition(kVocab, rng, Mode::all());
    const Condition t = strict_l2_nullify(c, Mode::of(Modality::Text), kVocab);
    CHECK(t.mode == Mode::of(Modality::Text));
    CHECK(t.text_tokens == c.text_tokens);
    for (auto m : t.audio_mask) CHECK(m == 0);
    CHECK_THROWS_AS(strict_l2_nullify(c, Mode{}, kVocab), Error);
  }

  TEST_CASE("property: scores ignore the content of inactive modalities") {
    Rng rng(5);
    for (int i = 0; i < 300; ++i) {
      const JudgeParams j = random_judge(kVocab, rng);
      const Mode mode = evaluation_modes()[rng.index(6)];
      const Condition c = random_condition(kVocab, rng, Mode::all());
      const Condition other = mutate_inactive(c, mode, kVocab, rng);
      const MotionSequence m = random_motion(kVocab, rng, "m");
      CHECK(judge_score(j, c, m, mode) == judge_score(j, other, m, mode));
    }
  }
}

TEST_SUITE("fuse") {
  TEST_CASE("a single active modality gets the whole attention weight") {
    Rng rng(6);
    const JudgeParams j = random_judge(kVocab, rng);
    std::array<Eigen::VectorXd, 3> s;
    for (auto& v : s) v = Eigen::VectorXd::Random(j.weights.dim());
    const FusionEncoding f = fuse(j.weights, s, Mode::of(Modality::Audio));
    REQUIRE(f.active.size() == 1);
    CHECK(f.attn[0] == doctest::Approx(1.0));
    CHECK(f.z.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(fuse(j.weights, s, Mode{}), Error);
  }
}

TEST_SUITE("compatibility") {
  TEST_CASE("examples") {
    CHECK(compatibility(unit({1, 0}), unit({1, 0}), 0.0) == doctest::Approx(1.0));
    CHECK(compatibility(unit({1, 0}), unit({0, 1}), 0.0) == doctest::Approx(0.0));
    const Eigen::VectorXd a = unit({1, 0});
    const Eigen::VectorXd b = unit({0.5, std::sqrt(0.75)});
    CHECK(compatibility(a, b, std::log(2.0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(compatibility(Eigen::VectorXd::Ones(2), a, 0.0), Error);
  }

  TEST_CASE("property: scores are bounded by the scale") {
    Rng rng(7);
    for (int i = 0; i < 300; ++i) {
      const JudgeParams j = random_judge(kVocab, rng);
      const Mode mode = evaluation_modes()[rng.index(6)];
      const JudgeScores s = judge_scores(j, random_condition(kVocab, rng, Mode::all()),
                                         random_motion(kVocab, rng, "m"), mode);
      CHECK(std::abs(s.fused) <= j.alpha() * (1.0 + 1e-12));
      for (Modality m : kModalities) CHECK(s.per_modality[static_cast<int>(m)].has_value() == mode.contains(m));
    }
  }
}

TEST_SUITE("infonce_group_loss") {
  TEST_CASE("every candidate positive gives zero without a bank") {
    Rng rng(8);
    JudgeParams j = random_judge(kVocab, rng, 0);
    Rng g(9);
    const Group group = random_group(kVocab, g, "g", Mode::all());
    const TierSet all{true, true, true};
    CHECK(std::abs(infonce_group_loss(j, group, all, Mode::all(), 1.0)) < 1e-12);
  }

  TEST_CASE("one positive among n equal scores gives ln n") {
    Rng rng(10);
    const JudgeParams j = random_judge(kVocab, rng, 0);
    for (int n = 2; n <= 6; ++n) {
      const Group group = identical_candidates(rng, 1, n - 1);
      CHECK(infonce_group_loss(j, group, TierSet{}, Mode::all(), 1.0) ==
            doctest::Approx(std::log(static_cast<double>(n))).epsilon(1e-12));
    }
  }

  TEST_CASE("two candidates give softplus of the score gap") {
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
      const JudgeParams j = random_judge(kVocab, rng, 0);
      Group group;
      group.group_id = "two";
      group.condition = random_condition(kVocab, rng, Mode::all());
      group.candidates = {{random_motion(kVocab, rng, "p"), Tier::Gold},
                          {random_motion(kVocab, rng, "n"), Tier::Negative}};
      const Mode mode = evaluation_modes()[rng.index(6)];
      const double sp = judge_score(j, group.condition, group.candidates[0].motion, mode);
      const double sn = judge_score(j, group.condition, group.candidates[1].motion, mode);
      CHECK(infonce_group_loss(j, group, TierSet{}, mode, 1.0) ==
            doctest::Approx(std::log1p(std::exp(sn - sp))).epsilon(1e-12));
    }
  }

  TEST_CASE("bank entries only add to the loss; an empty positive set is rejected") {
    Rng rng(12);
    const JudgeParams with_bank = random_judge(kVocab, rng, 6);
    JudgeParams no_bank = with_bank;
    no_bank.bank.resize(0, with_bank.bank.cols());
    const Group group = random_group(kVocab, rng, "g", Mode::all());
    CHECK(infonce_group_loss(with_bank, group, TierSet{}, Mode::all(), 1.0) >
          infonce_group_loss(no_bank, group, TierSet{}, Mode::all(), 1.0));
    CHECK_THROWS_AS(infonce_group_loss(no_bank, group, TierSet{false, false, false}, Mode::all(), 1.0),
                    Error);
  }

  TEST_CASE("per-modality view of an inactive modality is rejected") {
    Rng rng(13);
    const JudgeParams j = random_judge(kVocab, rng);
    const Group group = random_group(kVocab, rng, "g", Mode::all());
    CHECK_THROWS_AS(infonce_group_loss(j, group, TierSet{}, Mode::of(Modality::Text), 1.0,
                                       ConditionView::Audio),
                    Error);
  }
}

TEST_SUITE("judge_total_loss") {
  TEST_CASE("composes the weighted per-view losses averaged over the batch") {
    Rng rng(14);
    const JudgeParams j = random_judge(kVocab, rng);
    const auto batch = random_moded_groups(kVocab, rng, 4);
    const JudgeLossConfig cfg;
    double expected = 0.0;
    for (const auto& item : batch) {
      expected += cfg.lambda_fused * infonce_group_loss(j, item.group, cfg.positives, item.mode, cfg.beta);
      const double lambdas[] = {cfg.lambda_text, cfg.lambda_audio, cfg.lambda_emotion};
      for (Modality m : kModalities)
        if (item.mode.contains(m))
          expected += lambdas[static_cast<int>(m)] *
                      infonce_group_loss(j, item.group, cfg.positives, item.mode, cfg.beta,
                                         static_cast<ConditionView>(m));
    }
    CHECK(judge_total_loss(j, batch, cfg) == doctest::Approx(expected / 4.0).epsilon(1e-12));
  }

  TEST_CASE("zero per-modality weights leave only the fused term") {
    Rng rng(15);
    const JudgeParams j = random_judge(kVocab, rng);
    const auto batch = random_moded_groups(kVocab, rng, 3);
    JudgeLossConfig cfg;
    cfg.lambda_text = cfg.lambda_audio = cfg.lambda_emotion = 0.0;
    double expected = 0.0;
    for (const auto& item : batch)
      expected += infonce_group_loss(j, item.group, cfg.positives, item.mode, cfg.beta);
    CHECK(judge_total_loss(j, batch, cfg) == doctest::Approx(expected / 3.0).epsilon(1e-12));
  }

  TEST_CASE("gradient matches central differences") {
    Rng rng(16);
    for (int i = 0; i < 5; ++i) {
      JudgeParams j = random_judge(kVocab, rng);
      const auto batch = random_moded_groups(kVocab, rng, 2);
      const JudgeLossConfig cfg;
      JudgeGradient g;
      judge_total_loss(j, batch, cfg, &g);
      const auto numeric =
          numeric_gradient(j.weights.values(), [&] { return judge_total_loss(j, batch, cfg); });
      CHECK(max_relative_error(g.values(), numeric) < 1e-4);
    }
  }
}

TEST_SUITE("train_judge") {
  WorldConfig tiny() {
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

  JudgeTrainConfig quick() {
    JudgeTrainConfig c;
    c.dims = {6, 4, 0.1, 0.07};
    c.bank_size = 8;
    c.optimizer.total_steps = 12;
    c.optimizer.warmup_steps = 2;
    c.optimizer.batch_size = 3;
    return c;
  }

  TEST_CASE("step 0 leaves the judge unchanged; seeds make runs bit-identical") {
    const PlantedWorld w = generate_world(tiny());
    const JudgeTrainConfig cfg = quick();
    Rng init(1);
    const auto fresh = JudgeTrainingState::fresh(init_judge(w.vocab, cfg.dims, init));
    const auto none = train_judge(fresh, w.dataset, cfg, 2, 0);
    CHECK(none.state.params.weights == fresh.params.weights);

    const auto a = train_judge(fresh, w.dataset, cfg, 2);
    const auto b = train_judge(fresh, w.dataset, cfg, 2);
    CHECK(a.state.params == b.state.params);
    CHECK(a.log.size() == 12);
    for (const auto& e : a.log) {
      CHECK(std::isfinite(e.loss));
      CHECK(!e.mode.empty());
    }
    CHECK(a.state.params.bank.rows() <= 8);
    for (Eigen::Index r = 0; r < a.state.params.bank.rows(); ++r)
      CHECK(a.state.params.bank.row(r).norm() == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("resuming matches an uninterrupted run") {
    const PlantedWorld w = generate_world(tiny());
    const JudgeTrainConfig cfg = quick();
    Rng init(2);
    const auto fresh = JudgeTrainingState::fresh(init_judge(w.vocab, cfg.dims, init));
    const auto full = train_judge(fresh, w.dataset, cfg, 3);
    const auto half = train_judge(fresh, w.dataset, cfg, 3, 5);
    const auto rest = train_judge(half.state, w.dataset, cfg, 3);
    CHECK(rest.state.params == full.state.params);
  }
}
