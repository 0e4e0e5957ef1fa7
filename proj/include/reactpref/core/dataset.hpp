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

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reactpref/core/vocab.hpp"

namespace reactpref {

/// Speaker utterance. Canonical form: masks mark non-pad positions; an
/// inactive modality holds only pad tokens (text/audio) with an all-false
/// mask, or the unknown-emotion sentinel.
struct Condition {
  std::vector<TokenId> text_tokens;
  std::vector<std::uint8_t> text_mask;
  std::vector<TokenId> audio_tokens;
  std::vector<std::uint8_t> audio_mask;
  TokenId emotion = 0;
  Mode mode;

  friend bool operator==(const Condition&, const Condition&) = default;
};

/// Builds a canonical condition: derives masks and nullifies modalities
/// outside `mode`. Validates token ranges.
Condition make_condition(const VocabSpec& vocab, std::vector<TokenId> text,
                         std::vector<TokenId> audio, TokenId emotion, Mode mode);

/// Nullifies every modality outside `keep`. The result's mode is the
/// intersection of `keep` with the condition's own mode, which must be
/// non-empty.
Condition nullify_modalities(const Condition& cond, Mode keep, const VocabSpec& vocab);

void validate_condition(const Condition& cond, const VocabSpec& vocab);

/// Flat token form: text tokens, then <audio> ... </audio>, then
/// <emotion> e </emotion>, each block only when the modality is active.
/// Padding positions are skipped.
std::vector<TokenId> serialize_condition(const Condition& cond, const VocabSpec& vocab);

struct MotionSequence {
  std::vector<TokenId> tokens;
  std::string motion_id;

  friend bool operator==(const MotionSequence&, const MotionSequence&) = default;
};

void validate_motion(const MotionSequence& motion, const VocabSpec& vocab);

enum class Tier : std::uint8_t { Gold = 0, Silver = 1, Negative = 2 };

inline constexpr std::array<Tier, 3> kTiers = {Tier::Gold, Tier::Silver, Tier::Negative};

const char* tier_name(Tier tier) noexcept;
Tier parse_tier(std::string_view name);

struct Candidate {
  MotionSequence motion;
  Tier tier = Tier::Negative;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct Group {
  std::string group_id;
  Condition condition;
  std::vector<Candidate> candidates;

  std::vector<const Candidate*> tier(Tier t) const;
  std::size_t count(Tier t) const;
  bool tier_complete() const;

  friend bool operator==(const Group&, const Group&) = default;
};

enum class Split : std::uint8_t { Train = 0, Val = 1, Test = 2 };

const char* split_name(Split split) noexcept;
Split parse_split(std::string_view name);

struct Dataset {
  VocabSpec vocab;
  std::array<std::vector<Group>, 3> splits;

  std::vector<Group>& split(Split s) { return splits[static_cast<std::size_t>(s)]; }
  const std::vector<Group>& split(Split s) const {
    return splits[static_cast<std::size_t>(s)];
  }
  std::size_t group_count() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Parses line-delimited group records. Blank lines are skipped. Errors carry
/// the 1-based line number.
Dataset parse_dataset(std::string_view bytes, const VocabSpec& vocab);

/// Writes train, val, test groups in order; parse_dataset inverts it.
std::string write_dataset(const Dataset& dataset);

/// Whole-dataset invariants: unique group ids, each condition in one split.
void validate_dataset(const Dataset& dataset);

class FrequencyTable {
 public:
  FrequencyTable() = default;
  explicit FrequencyTable(std::map<std::string, std::int64_t> counts);

  /// Throws for ids never seen in the training split.
  std::int64_t count(const std::string& motion_id) const;
  bool contains(const std::string& motion_id) const { return counts_.contains(motion_id); }
  std::int64_t total() const;
  const std::map<std::string, std::int64_t>& counts() const { return counts_; }

 private:
  std::map<std::string, std::int64_t> counts_;
};

FrequencyTable build_frequency_table(std::span<const Group> train_groups);

/// 1 / sqrt(freq); freq must be >= 1.
double item_weight(std::int64_t freq);

/// Mean item weight over the group's candidates.
double group_weight(const Group& group, const FrequencyTable& table);

struct TierThresholds {
  double gold_min = 0.8;
  double silver_min = 0.5;
};

/// Weighted agent score against inclusive lower tier edges.
Tier assign_tier(std::span<const double> agent_scores, std::span<const double> agent_weights,
                 TierThresholds thresholds = {});

}  // namespace reactpref
