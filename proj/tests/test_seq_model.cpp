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
#include <map>

#include "reactpref/core/error.hpp"
#include "reactpref/core/seq_model.hpp"
#include "support.hpp"

using namespace reactpref;
using namespace reactpref::testing;

namespace {

const VocabSpec kVocab = small_vocab();

/// Per-step reference written against the raw tables.
double reference_loglik(const ModelParams& p, const Condition& cond, const MotionSequence& m) {
  const auto ids = serialize_condition(cond, p.vocab());
  Eigen::VectorXd ctx = Eigen::VectorXd::Zero(p.dim());
  for (TokenId id : ids) ctx += p.condition_embed().row(id).transpose();
  if (!ids.empty()) ctx /= static_cast<double>(ids.size());

  double total = 0.0;
  int prev_row = p.classes() - 1;  // begin sentinel row
  std::vector<int> targets;
  for (TokenId t : m.tokens) targets.push_back(p.vocab().motion.offset(t));
  targets.push_back(p.classes() - 1);  // end sentinel class
  for (int target : targets) {
    Eigen::VectorXd in(2 * p.dim());
    in << ctx, p.prev_embed().row(prev_row).transpose();
    std::vector<double> logits(static_cast<std::size_t>(p.classes()));
    double z = 0.0;
    for (int c = 0; c < p.classes(); ++c) {
      logits[c] = p.output_weight().row(c).dot(in) + p.output_bias()[c];
      z += std::exp(logits[c]);
    }
    total += logits[target] - std::log(z);
    prev_row = target;
  }
  return total / static_cast<double>(targets.size());
}

}  // namespace

TEST_SUITE("encode_condition") {
  TEST_CASE("zero embeddings give the zero vector; an active modality needs tokens") {
    const ModelParams zero(kVocab, 3);
    Rng rng(1);
    CHECK(encode_condition(zero, random_condition(kVocab, rng, Mode::all())).isZero());
    CHECK_THROWS_AS(make_condition(kVocab, {}, {13}, 18, Mode::of(Modality::Text)), Error);
  }

  TEST_CASE("single token and two-token mean") {
    Rng rng(2);
    const ModelParams p = random_model(kVocab, 3, 1.0, rng);
    const Condition one = make_condition(kVocab, {9}, {}, 18, Mode::of(Modality::Text));
    CHECK(encode_condition(p, one).isApprox(p.condition_embed().row(9).transpose(), 0.0));
    const Condition two = make_condition(kVocab, {9, 11}, {}, 18, Mode::of(Modality::Text));
    const Eigen::VectorXd mean =
        0.5 * (p.condition_embed().row(9) + p.condition_embed().row(11)).transpose();
    CHECK((encode_condition(p, two) - mean).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_SUITE("next_token_logits") {
  TEST_CASE("zero parameters give zero logits") {
    const ModelParams zero(kVocab, 4);
    const Eigen::VectorXd logits =
        next_token_logits(zero, Eigen::VectorXd::Zero(4), kVocab.special.begin_motion);
    CHECK(logits.size() == kVocab.motion.size + 1);
    CHECK(logits.isZero());
  }

  TEST_CASE("unit weights at d=1 give context plus previous embedding") {
    ModelParams p(kVocab, 1);
    p.output_weight().setOnes();
    const TokenId prev = kVocab.motion.at(2);
    p.prev_embed()(prev_index(kVocab, prev), 0) = 0.75;
    const Eigen::VectorXd ctx = Eigen::VectorXd::Constant(1, -0.25);
    const Eigen::VectorXd logits = next_token_logits(p, ctx, prev);
    for (int c = 0; c < logits.size(); ++c) CHECK(logits[c] == 0.5);
    CHECK(next_token_logits(p, ctx, prev) == logits);
  }

  TEST_CASE("previous token outside motion and begin is rejected") {
    const ModelParams zero(kVocab, 2);
    CHECK_THROWS_AS(next_token_logits(zero, Eigen::VectorXd::Zero(2), kVocab.text.start), Error);
    CHECK_THROWS_AS(next_token_logits(zero, Eigen::VectorXd::Zero(2), kVocab.special.end_motion),
                    Error);
  }

  TEST_CASE("log-softmax rows sum to one") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
      Eigen::VectorXd v(9);
      for (int k = 0; k < 9; ++k) v[k] = 30.0 * rng.normal();
      log_softmax_inplace(v);
      CHECK(std::abs(v.array().exp().sum() - 1.0) <= 1e-12);
    }
  }
}

TEST_SUITE("sequence_loglik") {
  TEST_CASE("zero parameters, 8 motion ids: -ln 9 for any sequence") {
    const VocabSpec v = VocabSpec::standard(4, 4, 2, 8, 16);
    const ModelParams zero(v, 3);
    Rng rng(4);
    for (int i = 0; i < 30; ++i) {
      const MotionSequence m = random_motion(v, rng, "m");
      CHECK(std::abs(sequence_loglik(zero, random_condition(v, rng, Mode::all()), m) + std::log(9.0)) <= 1e-14);
    }
  }

  TEST_CASE("a 20-logit margin on every true step is within epsilon of 0") {
    ModelParams p(kVocab, 1);
    const TokenId t = kVocab.motion.at(3);
    const int begin = prev_index(kVocab, kVocab.special.begin_motion);
    const int end_class = p.classes() - 1;
    p.prev_embed()(begin, 0) = 1.0;
    p.prev_embed()(prev_index(kVocab, t), 0) = -1.0;
    // Column 1 of output_weight reads the previous-token embedding.
    p.output_weight()(kVocab.motion.offset(t), 1) = 20.0;
    p.output_weight()(end_class, 1) = -20.0;
    const Condition c = make_condition(kVocab, {8}, {}, 18, Mode::of(Modality::Text));
    const double l = sequence_loglik(p, c, {{t}, "x"});
    CHECK(l <= 0.0);
    CHECK(l >= -1e-7);
  }

  TEST_CASE("d=2 length-3 fixtures match the per-step reference") {
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
      const ModelParams p = random_model(kVocab, 2, 0.8, rng);
      const Condition c = random_condition(kVocab, rng, evaluation_modes()[rng.index(6)]);
      MotionSequence m{random_tokens(kVocab.motion, 3, 3, rng), "m"};
      CHECK(sequence_loglik(p, c, m) == doctest::Approx(reference_loglik(p, c, m)).epsilon(1e-12));
    }
  }

  TEST_CASE("property: non-positive and length-free for the zero model") {
    Rng rng(6);
    const ModelParams zero(kVocab, 2);
    for (int i = 0; i < 200; ++i) {
      const ModelParams p = random_model(kVocab, 3, 2.0, rng);
      const Condition c = random_condition(kVocab, rng, Mode::all());
      const MotionSequence m = random_motion(kVocab, rng, "m");
      CHECK(sequence_loglik(p, c, m) <= 0.0);
      CHECK(std::abs(sequence_loglik(zero, c, m) + std::log(kVocab.motion.size + 1.0)) <= 1e-14);
    }
  }

  TEST_CASE("empty or out-of-range motions are rejected") {
    const ModelParams zero(kVocab, 2);
    const Condition c = make_condition(kVocab, {8}, {}, 18, Mode::of(Modality::Text));
    CHECK_THROWS_AS(sequence_loglik(zero, c, {{}, "e"}), Error);
    CHECK_THROWS_AS(sequence_loglik(zero, c, {{kVocab.text.start}, "e"}), Error);
  }
}

TEST_SUITE("sample_motion") {
  TEST_CASE("same seed gives the same sequence") {
    Rng init(7);
    const ModelParams p = random_model(kVocab, 3, 1.0, init);
    const Condition c = random_condition(kVocab, init, Mode::all());
    for (int s = 0; s < 20; ++s) {
      Rng a(100 + s), b(100 + s);
      CHECK(sample_motion(p, c, 8, 1.0, a) == sample_motion(p, c, 8, 1.0, b));
    }
  }

  TEST_CASE("near-zero temperature is greedy decoding") {
    Rng init(8);
    for (int trial = 0; trial < 20; ++trial) {
      const ModelParams p = random_model(kVocab, 3, 1.5, init);
      const Condition c = random_condition(kVocab, init, Mode::all());
      const Eigen::VectorXd ctx = encode_condition(p, c);
      std::vector<TokenId> greedy;
      TokenId prev = kVocab.special.begin_motion;
      while (static_cast<int>(greedy.size()) < 8) {
        Eigen::VectorXd logits = next_token_logits(p, ctx, prev);
        Eigen::Index best;
        logits.maxCoeff(&best);
        if (best == logits.size() - 1) break;
        prev = kVocab.motion.at(static_cast<int>(best));
        greedy.push_back(prev);
      }
      if (greedy.empty()) continue;  // greedy stops at once; the fallback path applies instead
      Rng rng(trial);
      CHECK(sample_motion(p, c, 8, 1e-9, rng).tokens == greedy);
    }
  }

  TEST_CASE("uniform model draws motion ids uniformly") {
    const ModelParams zero(kVocab, 2);
    const Condition c = make_condition(kVocab, {8}, {}, 18, Mode::of(Modality::Text));
    Rng rng(9);
    std::map<TokenId, int> counts;
    int total = 0;
    for (int i = 0; i < 10000; ++i) {
      const MotionSequence m = sample_motion(zero, c, 5, 1.0, rng);
      CHECK(!m.tokens.empty());
      CHECK(m.tokens.size() <= 5);
      // The first position can come from the empty-sample fallback; later ones cannot.
      for (std::size_t k = 1; k < m.tokens.size(); ++k) {
        ++counts[m.tokens[k]];
        ++total;
      }
    }
    const double p = 1.0 / kVocab.motion.size;
    const double sigma = std::sqrt(total * p * (1.0 - p));
    REQUIRE(counts.size() == static_cast<std::size_t>(kVocab.motion.size));
    for (const auto& [tok, n] : counts) CHECK(std::abs(n - total * p) <= 3.0 * sigma);
  }
}

TEST_SUITE("loglik_gradient") {
  TEST_CASE("rows never touched by the fixture get zero gradient") {
    const ModelParams zero(kVocab, 3);
    const Condition c = make_condition(kVocab, {8, 9}, {}, 18, Mode::of(Modality::Text));
    const ModelGradient g = loglik_gradient(zero, c, {{kVocab.motion.at(1)}, "m"});
    for (TokenId id = 0; id < kVocab.total_size(); ++id)
      if (id != 8 && id != 9) CHECK(g.condition_embed().row(id).isZero());
  }

  TEST_CASE("matches central differences") {
    Rng rng(10);
    for (int i = 0; i < 20; ++i) {
      ModelParams p = random_model(kVocab, 2, 0.8, rng);
      const Condition c = random_condition(kVocab, rng, evaluation_modes()[rng.index(6)]);
      const MotionSequence m = random_motion(kVocab, rng, "m");
      const auto numeric =
          numeric_gradient(p.values(), [&] { return sequence_loglik(p, c, m); });
      CHECK(max_relative_error(loglik_gradient(p, c, m).values(), numeric) < 1e-4);
    }
  }

  TEST_CASE("gradient of a mean is the mean of gradients") {
    Rng rng(11);
    const ModelParams p = random_model(kVocab, 3, 0.8, rng);
    const Condition c = random_condition(kVocab, rng, Mode::all());
    const MotionSequence a = random_motion(kVocab, rng, "a"), b = random_motion(kVocab, rng, "b");
    ModelGradient mean = zero_gradient_like(p);
    accumulate_loglik_gradient(p, c, a, 0.5, mean);
    accumulate_loglik_gradient(p, c, b, 0.5, mean);
    const ModelGradient ga = loglik_gradient(p, c, a), gb = loglik_gradient(p, c, b);
    for (std::size_t i = 0; i < mean.values().size(); ++i)
      CHECK(mean.values()[i] == doctest::Approx(0.5 * (ga.values()[i] + gb.values()[i])).epsilon(1e-12));
  }
}
