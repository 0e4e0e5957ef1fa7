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

#include <set>

#include "reactpref/core/dataset.hpp"
#include "reactpref/core/error.hpp"
#include "reactpref/core/synthetic.hpp"

using namespace reactpref;

namespace {

WorldConfig compact(std::uint64_t seed) {
  WorldConfig w;
  w.seed = seed;
  w.n_concepts = 4;
  w.groups_per_split = {16, 4, 8};
  w.motions_per_anchor = 12;
  w.text_vocab = w.audio_vocab = w.motion_vocab = 24;
  w.feature_dim = 8;
  return w;
}

}  // namespace

TEST_SUITE("generate_world") {
  TEST_CASE("same seed gives the same world; different seeds differ") {
    const PlantedWorld a = generate_world(compact(3));
    const PlantedWorld b = generate_world(compact(3));
    const PlantedWorld c = generate_world(compact(4));
    CHECK(write_dataset(a.dataset) == write_dataset(b.dataset));
    CHECK(a.sidecar_json() == b.sidecar_json());
    CHECK(write_dataset(a.dataset) != write_dataset(c.dataset));
  }

  TEST_CASE("default tier sizes are 3, 11 and 35 per group") {
    WorldConfig cfg = compact(1);
    cfg.candidates_per_tier = {3, 11, 35};
    const PlantedWorld w = generate_world(cfg);
    for (Split s : {Split::Train, Split::Val, Split::Test})
      for (const Group& g : w.dataset.split(s)) {
        CHECK(g.tier(Tier::Gold).size() == 3);
        CHECK(g.tier(Tier::Silver).size() == 11);
        CHECK(g.tier(Tier::Negative).size() == 35);
      }
  }

  TEST_CASE("split sizes, distinct motion ids and a valid dataset") {
    const PlantedWorld w = generate_world(compact(2));
    CHECK(w.dataset.split(Split::Train).size() == 16);
    CHECK(w.dataset.split(Split::Val).size() == 4);
    CHECK(w.dataset.split(Split::Test).size() == 8);
    CHECK_NOTHROW(validate_dataset(w.dataset));
    for (const Group& g : w.dataset.split(Split::Train)) {
      std::set<std::string> ids;
      for (const auto& c : g.candidates) ids.insert(c.motion.motion_id);
      CHECK(ids.size() == g.candidates.size());
    }
  }

  TEST_CASE("without noise the planted similarity orders Gold over Silver over Negative") {
    WorldConfig cfg = compact(5);
    cfg.noise = 0.0;
    cfg.token_jitter = 0.0;
    const PlantedWorld w = generate_world(cfg);
    for (Split s : {Split::Train, Split::Val, Split::Test})
      for (const Group& g : w.dataset.split(s)) {
        const auto ranked = oracle_rank(w, g);
        for (std::size_t i = 1; i < ranked.size(); ++i)
          CHECK(static_cast<int>(ranked[i - 1]->tier) <= static_cast<int>(ranked[i]->tier));
      }
  }

  TEST_CASE("oracle_rank is a permutation sorted by similarity") {
    const PlantedWorld w = generate_world(compact(6));
    const Group& g = w.dataset.split(Split::Test).front();
    const auto ranked = oracle_rank(w, g);
    REQUIRE(ranked.size() == g.candidates.size());
    for (std::size_t i = 1; i < ranked.size(); ++i)
      CHECK(w.similarity(g.group_id, ranked[i - 1]->motion) >=
            w.similarity(g.group_id, ranked[i]->motion));
  }

  TEST_CASE("sidecar round trip preserves similarities") {
    const PlantedWorld w = generate_world(compact(7));
    const PlantedWorld back = PlantedWorld::from_sidecar(w.sidecar_json(), w.dataset);
    for (const Group& g : w.dataset.split(Split::Test))
      for (const auto& c : g.candidates)
        CHECK(back.similarity(g.group_id, c.motion) == w.similarity(g.group_id, c.motion));
    CHECK_THROWS_AS(PlantedWorld::from_sidecar("{}", w.dataset), Error);
  }

  TEST_CASE("dominant negative appears in the requested share of training groups") {
    WorldConfig cfg = compact(8);
    cfg.dominant_negative_fraction = 0.5;
    const PlantedWorld w = generate_world(cfg);
    int holding = 0;
    for (const Group& g : w.dataset.split(Split::Train))
      for (const auto& c : g.candidates)
        if (c.motion.motion_id == kDominantMotionId) {
          CHECK(c.tier == Tier::Negative);
          ++holding;
        }
    CHECK(holding == 8);
  }

  TEST_CASE("infeasible or invalid configurations are rejected") {
    WorldConfig cfg = compact(9);
    cfg.candidates_per_tier = {1, 100, 1};
    CHECK_THROWS_AS(generate_world(cfg), Error);
    cfg = compact(9);
    cfg.silver_blend = 1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = compact(9);
    cfg.n_concepts = 1;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }

  TEST_CASE("config JSON round trip and unknown keys") {
    const WorldConfig cfg = compact(10);
    CHECK(WorldConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());
    Json bad = cfg.to_json();
    bad["colour"] = 1;
    CHECK_THROWS_AS(WorldConfig::from_json(bad), Error);
  }
}
