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

#include "reactpref/core/dataset.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

#include "reactpref/core/json_util.hpp"

namespace reactpref {

namespace {

std::vector<std::uint8_t> mask_of(const std::vector<TokenId>& tokens, TokenId pad) {
  std::vector<std::uint8_t> mask(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) mask[i] = tokens[i] != pad ? 1 : 0;
  return mask;
}

void check_sequence(const std::vector<TokenId>& tokens, const std::vector<std::uint8_t>& mask,
                    const TokenRange& range, TokenId pad, bool active, const char* what) {
  require(tokens.size() == mask.size(), ErrorKind::InvalidArgument,
          std::string(what) + ": mask length differs from token length");
  bool any = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const TokenId t = tokens[i];
    if (!active) {
      require(t == pad && mask[i] == 0, ErrorKind::InvalidArgument,
              std::string(what) + ": inactive modality must be all pad with empty mask");
      continue;
    }
    if (t == pad) {
      require(mask[i] == 0, ErrorKind::InvalidArgument,
              std::string(what) + ": pad position marked valid");
    } else {
      require(range.contains(t), ErrorKind::InvalidArgument,
              std::string(what) + ": token " + std::to_string(t) + " outside range [" +
                  std::to_string(range.start) + ", " + std::to_string(range.last()) + "]");
      require(mask[i] == 1, ErrorKind::InvalidArgument,
              std::string(what) + ": valid token marked as padding");
      any = true;
    }
  }
  require(!active || any, ErrorKind::InvalidArgument,
          std::string(what) + ": active modality has no valid tokens");
}

}  // namespace

Condition make_condition(const VocabSpec& vocab, std::vector<TokenId> text,
                         std::vector<TokenId> audio, TokenId emotion, Mode mode) {
  require(!mode.empty(), ErrorKind::InvalidArgument, "condition mode must be non-empty");
  auto nullable = [&](const std::vector<TokenId>& tokens, const TokenRange& range,
                      const char* what) {
    for (TokenId t : tokens)
      require(t == vocab.special.pad || range.contains(t), ErrorKind::InvalidArgument,
              std::string(what) + " token " + std::to_string(t) + " out of vocabulary range");
  };
  nullable(text, vocab.text, "text");
  nullable(audio, vocab.audio, "audio");
  require(emotion == vocab.special.unknown_emotion || vocab.emotion.contains(emotion),
          ErrorKind::InvalidArgument,
          "emotion id " + std::to_string(emotion) + " out of vocabulary range");

  Condition cond;
  cond.text_tokens = std::move(text);
  cond.audio_tokens = std::move(audio);
  cond.text_mask = mask_of(cond.text_tokens, vocab.special.pad);
  cond.audio_mask = mask_of(cond.audio_tokens, vocab.special.pad);
  cond.emotion = emotion;
  cond.mode = Mode::all();
  cond = nullify_modalities(cond, mode, vocab);
  cond.mode = mode;
  validate_condition(cond, vocab);
  return cond;
}

Condition nullify_modalities(const Condition& cond, Mode keep, const VocabSpec& vocab) {
  require(!keep.empty(), ErrorKind::InvalidArgument, "modality mode must be non-empty");
  const Mode result_mode = Mode::from_bits(keep.bits() & cond.mode.bits());
  require(!result_mode.empty(), ErrorKind::InvalidArgument,
          "mode " + keep.label() + " leaves no active modality in condition with mode " +
              cond.mode.label());
  Condition out = cond;
  if (!keep.contains(Modality::Text)) {
    std::fill(out.text_tokens.begin(), out.text_tokens.end(), vocab.special.pad);
    std::fill(out.text_mask.begin(), out.text_mask.end(), 0);
  }
  if (!keep.contains(Modality::Audio)) {
    std::fill(out.audio_tokens.begin(), out.audio_tokens.end(), vocab.special.pad);
    std::fill(out.audio_mask.begin(), out.audio_mask.end(), 0);
  }
  if (!keep.contains(Modality::Emotion)) out.emotion = vocab.special.unknown_emotion;
  out.mode = result_mode;
  return out;
}

void validate_condition(const Condition& cond, const VocabSpec& vocab) {
  require(!cond.mode.empty(), ErrorKind::InvalidArgument, "condition mode must be non-empty");
  check_sequence(cond.text_tokens, cond.text_mask, vocab.text, vocab.special.pad,
                 cond.mode.contains(Modality::Text), "text");
  check_sequence(cond.audio_tokens, cond.audio_mask, vocab.audio, vocab.special.pad,
                 cond.mode.contains(Modality::Audio), "audio");
  if (cond.mode.contains(Modality::Emotion)) {
    require(vocab.emotion.contains(cond.emotion), ErrorKind::InvalidArgument,
            "emotion id " + std::to_string(cond.emotion) + " outside emotion range");
  } else {
    require(cond.emotion == vocab.special.unknown_emotion, ErrorKind::InvalidArgument,
            "inactive emotion must be the unknown-emotion sentinel");
  }
}

std::vector<TokenId> serialize_condition(const Condition& cond, const VocabSpec& vocab) {
  std::vector<TokenId> out;
  out.reserve(cond.text_tokens.size() + cond.audio_tokens.size() + 5);
  if (cond.mode.contains(Modality::Text)) {
    for (std::size_t i = 0; i < cond.text_tokens.size(); ++i)
      if (cond.text_mask[i]) out.push_back(cond.text_tokens[i]);
  }
  if (cond.mode.contains(Modality::Audio)) {
    out.push_back(vocab.special.begin_audio);
    for (std::size_t i = 0; i < cond.audio_tokens.size(); ++i)
      if (cond.audio_mask[i]) out.push_back(cond.audio_tokens[i]);
    out.push_back(vocab.special.end_audio);
  }
  if (cond.mode.contains(Modality::Emotion)) {
    out.push_back(vocab.special.begin_emotion);
    out.push_back(cond.emotion);
    out.push_back(vocab.special.end_emotion);
  }
  return out;
}

void validate_motion(const MotionSequence& motion, const VocabSpec& vocab) {
  require(!motion.tokens.empty(), ErrorKind::InvalidArgument,
          "motion '" + motion.motion_id + "' is empty");
  require(static_cast<int>(motion.tokens.size()) <= vocab.max_target_length,
          ErrorKind::InvalidArgument,
          "motion '" + motion.motion_id + "' exceeds max target length " +
              std::to_string(vocab.max_target_length));
  for (TokenId t : motion.tokens)
    require(vocab.motion.contains(t), ErrorKind::InvalidArgument,
            "motion '" + motion.motion_id + "' token " + std::to_string(t) +
                " outside motion range [" + std::to_string(vocab.motion.start) + ", " +
                std::to_string(vocab.motion.last()) + "]");
}

const char* tier_name(Tier tier) noexcept {
  switch (tier) {
    case Tier::Gold: return "gold";
    case Tier::Silver: return "silver";
    case Tier::Negative: return "negative";
  }
  return "?";
}

Tier parse_tier(std::string_view name) {
  if (name == "gold") return Tier::Gold;
  if (name == "silver") return Tier::Silver;
  if (name == "negative") return Tier::Negative;
  fail(ErrorKind::Parse, "unknown tier '" + std::string(name) + "'");
}

std::vector<const Candidate*> Group::tier(Tier t) const {
  std::vector<const Candidate*> out;
  for (const auto& c : candidates)
    if (c.tier == t) out.push_back(&c);
  return out;
}

std::size_t Group::count(Tier t) const {
  std::size_t n = 0;
  for (const auto& c : candidates) n += c.tier == t ? 1 : 0;
  return n;
}

bool Group::tier_complete() const {
  return count(Tier::Gold) > 0 && count(Tier::Silver) > 0 && count(Tier::Negative) > 0;
}

const char* split_name(Split split) noexcept {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  fail(ErrorKind::Parse, "unknown split '" + std::string(name) + "'");
}

std::size_t Dataset::group_count() const {
  return splits[0].size() + splits[1].size() + splits[2].size();
}

namespace {

std::vector<TokenId> token_list(const Json& rec, const char* key) {
  const Json& v = rec.at(key);
  require(v.is_array(), ErrorKind::Parse, std::string(key) + " must be an integer list");
  std::vector<TokenId> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    require(x.is_number_integer(), ErrorKind::Parse,
            std::string(key) + " must contain integers");
    out.push_back(x.get<TokenId>());
  }
  return out;
}

Group parse_group(const Json& rec, const VocabSpec& vocab, Split& split) {
  require(rec.is_object(), ErrorKind::Parse, "record is not a JSON object");
  for (const char* key :
       {"group_id", "split", "text_tokens", "audio_tokens", "emotion", "mode", "candidates"})
    require(rec.contains(key), ErrorKind::Parse, std::string("missing field '") + key + "'");
  for (const auto& [key, _] : rec.items()) {
    static const std::set<std::string> known = {"group_id", "split", "text_tokens",
                                                "audio_tokens", "emotion", "mode",
                                                "candidates"};
    require(known.contains(key), ErrorKind::Parse, "unknown field '" + key + "'");
  }
  require(rec.at("group_id").is_string() && rec.at("split").is_string(), ErrorKind::Parse,
          "group_id and split must be strings");
  require(rec.at("emotion").is_number_integer(), ErrorKind::Parse,
          "emotion must be an integer");
  require(rec.at("mode").is_array(), ErrorKind::Parse, "mode must be a list of modality names");
  require(rec.at("candidates").is_array(), ErrorKind::Parse, "candidates must be a list");

  Group group;
  group.group_id = rec.at("group_id").get<std::string>();
  require(!group.group_id.empty(), ErrorKind::Parse, "group_id must be non-empty");
  split = parse_split(rec.at("split").get<std::string>());

  Mode mode;
  for (const auto& m : rec.at("mode")) {
    require(m.is_string(), ErrorKind::Parse, "mode entries must be strings");
    const std::string name = m.get<std::string>();
    if (name == "text") mode = mode.with(Modality::Text);
    else if (name == "audio") mode = mode.with(Modality::Audio);
    else if (name == "emotion") mode = mode.with(Modality::Emotion);
    else fail(ErrorKind::Parse, "unknown modality '" + name + "'");
  }
  require(!mode.empty(), ErrorKind::Parse, "mode must be non-empty");

  try {
    group.condition = make_condition(vocab, token_list(rec, "text_tokens"),
                                     token_list(rec, "audio_tokens"),
                                     rec.at("emotion").get<TokenId>(), mode);
  } catch (const Error& e) {
    fail(ErrorKind::Parse, e.what());
  }

  std::unordered_set<std::string> seen;
  for (const auto& c : rec.at("candidates")) {
    require(c.is_object(), ErrorKind::Parse, "candidate must be an object");
    for (const auto& [key, _] : c.items())
      require(key == "motion_id" || key == "tokens" || key == "tier", ErrorKind::Parse,
              "unknown candidate field '" + key + "'");
    require(c.contains("motion_id") && c.contains("tokens") && c.contains("tier"),
            ErrorKind::Parse, "candidate needs motion_id, tokens and tier");
    require(c.at("motion_id").is_string() && c.at("tier").is_string(), ErrorKind::Parse,
            "candidate motion_id and tier must be strings");
    Candidate cand;
    cand.motion.motion_id = c.at("motion_id").get<std::string>();
    cand.motion.tokens = token_list(c, "tokens");
    cand.tier = parse_tier(c.at("tier").get<std::string>());
    try {
      validate_motion(cand.motion, vocab);
    } catch (const Error& e) {
      fail(ErrorKind::Parse, e.what());
    }
    require(seen.insert(cand.motion.motion_id).second, ErrorKind::Parse,
            "duplicate motion_id '" + cand.motion.motion_id + "' within group");
    group.candidates.push_back(std::move(cand));
  }
  require(!group.candidates.empty(), ErrorKind::Parse, "group has no candidates");
  return group;
}

Json group_to_json(const Group& g, Split split) {
  Json cands = Json::array();
  for (const auto& c : g.candidates)
    cands.push_back(
        {{"motion_id", c.motion.motion_id}, {"tokens", c.motion.tokens}, {"tier", tier_name(c.tier)}});
  return {{"group_id", g.group_id},
          {"split", split_name(split)},
          {"text_tokens", g.condition.text_tokens},
          {"audio_tokens", g.condition.audio_tokens},
          {"emotion", g.condition.emotion},
          {"mode", g.condition.mode.names()},
          {"candidates", std::move(cands)}};
}

}  // namespace

Dataset parse_dataset(std::string_view bytes, const VocabSpec& vocab) {
  vocab.validate();
  Dataset ds;
  ds.vocab = vocab;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string_view::npos) end = bytes.size();
    std::string_view line = bytes.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      const Json rec = parse_json(line, ErrorKind::Parse, "malformed record");
      Split split = Split::Train;
      Group g = parse_group(rec, vocab, split);
      ds.split(split).push_back(std::move(g));
    } catch (const Error& e) {
      fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate_dataset(ds);
  return ds;
}

void validate_dataset(const Dataset& ds) {
  std::set<std::string> ids;
  std::map<std::vector<TokenId>, Split> seen;
  for (Split s : {Split::Train, Split::Val, Split::Test}) {
    for (const auto& g : ds.split(s)) {
      require(ids.insert(g.group_id).second, ErrorKind::Parse,
              "duplicate group_id '" + g.group_id + "'");
      auto key = serialize_condition(g.condition, ds.vocab);
      const auto [it, inserted] = seen.emplace(std::move(key), s);
      require(inserted || it->second == s, ErrorKind::Parse,
              "condition of group '" + g.group_id + "' appears in both " +
                  split_name(it->second) + " and " + split_name(s));
    }
  }
}

std::string write_dataset(const Dataset& ds) {
  std::string out;
  for (Split s : {Split::Train, Split::Val, Split::Test})
    for (const auto& g : ds.split(s)) {
      out += group_to_json(g, s).dump();
      out += '\n';
    }
  return out;
}

FrequencyTable::FrequencyTable(std::map<std::string, std::int64_t> counts)
    : counts_(std::move(counts)) {
  for (const auto& [id, n] : counts_)
    require(n >= 1, ErrorKind::InvalidArgument, "frequency for '" + id + "' must be >= 1");
}

std::int64_t FrequencyTable::count(const std::string& motion_id) const {
  const auto it = counts_.find(motion_id);
  require(it != counts_.end(), ErrorKind::InvalidArgument,
          "motion id '" + motion_id + "' never appears in the training split");
  return it->second;
}

std::int64_t FrequencyTable::total() const {
  std::int64_t n = 0;
  for (const auto& [_, c] : counts_) n += c;
  return n;
}

FrequencyTable build_frequency_table(std::span<const Group> train_groups) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& g : train_groups)
    for (const auto& c : g.candidates) ++counts[c.motion.motion_id];
  return FrequencyTable(std::move(counts));
}

double item_weight(std::int64_t freq) {
  require(freq >= 1, ErrorKind::InvalidArgument,
          "item weight needs freq >= 1 (id never seen in training)");
  return 1.0 / std::sqrt(static_cast<double>(freq));
}

double group_weight(const Group& group, const FrequencyTable& table) {
  require(!group.candidates.empty(), ErrorKind::InvalidArgument,
          "group '" + group.group_id + "' has no candidates");
  double sum = 0.0;
  for (const auto& c : group.candidates) sum += item_weight(table.count(c.motion.motion_id));
  return sum / static_cast<double>(group.candidates.size());
}

Tier assign_tier(std::span<const double> scores, std::span<const double> weights,
                 TierThresholds thresholds) {
  require(!scores.empty() && scores.size() == weights.size(), ErrorKind::InvalidArgument,
          "assign_tier needs equal-length, non-empty score and weight lists");
  require(thresholds.gold_min > thresholds.silver_min, ErrorKind::InvalidArgument,
          "gold threshold must exceed silver threshold");
  for (double w : weights)
    require(w >= 0.0, ErrorKind::InvalidArgument, "agent weights must be non-negative");
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  require(std::abs(wsum - 1.0) <= 1e-9, ErrorKind::InvalidArgument,
          "agent weights must sum to 1");
  double final_score = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) final_score += weights[k] * scores[k];
  if (final_score >= thresholds.gold_min) return Tier::Gold;
  if (final_score >= thresholds.silver_min) return Tier::Silver;
  return Tier::Negative;
}

}  // namespace reactpref
