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

#include "reactpref/core/vocab.hpp"

#include <algorithm>
#include <bit>
#include <cctype>

#include "reactpref/core/json_util.hpp"

namespace reactpref {

const char* modality_name(Modality m) noexcept {
  switch (m) {
    case Modality::Text: return "text";
    case Modality::Audio: return "audio";
    case Modality::Emotion: return "emotion";
  }
  return "?";
}

int Mode::size() const { return std::popcount(static_cast<unsigned>(bits_)); }

std::string Mode::label() const {
  static constexpr const char* kShort[] = {"T", "A", "E"};
  std::string out;
  for (Modality m : kModalities) {
    if (!contains(m)) continue;
    if (!out.empty()) out += '+';
    out += kShort[static_cast<int>(m)];
  }
  return out.empty() ? "none" : out;
}

std::vector<std::string> Mode::names() const {
  std::vector<std::string> out;
  for (Modality m : kModalities)
    if (contains(m)) out.emplace_back(modality_name(m));
  return out;
}

Mode Mode::parse(std::string_view text) {
  Mode mode;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t next = text.find('+', pos);
    if (next == std::string_view::npos) next = text.size();
    std::string part(text.substr(pos, next - pos));
    std::transform(part.begin(), part.end(), part.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (part == "t" || part == "text") {
      mode = mode.with(Modality::Text);
    } else if (part == "a" || part == "audio") {
      mode = mode.with(Modality::Audio);
    } else if (part == "e" || part == "emotion") {
      mode = mode.with(Modality::Emotion);
    } else {
      fail(ErrorKind::Config, "unsupported mode '" + std::string(text) + "'");
    }
    pos = next + 1;
  }
  require(!mode.empty(), ErrorKind::Config, "mode must name at least one modality");
  return mode;
}

const std::array<Mode, 6>& evaluation_modes() {
  static const std::array<Mode, 6> modes = {
      Mode::of(Modality::Text),
      Mode::of(Modality::Audio),
      Mode::of(Modality::Text).with(Modality::Audio),
      Mode::of(Modality::Text).with(Modality::Emotion),
      Mode::of(Modality::Audio).with(Modality::Emotion),
      Mode::all(),
  };
  return modes;
}

int VocabSpec::total_size() const {
  return static_cast<int>(special.ids().size()) + text.size + audio.size + emotion.size +
         motion.size;
}

void VocabSpec::validate() const {
  require(text.size >= 1 && audio.size >= 1 && emotion.size >= 1, ErrorKind::Config,
          "vocab: text, audio and emotion ranges must be non-empty");
  require(motion.size >= 2, ErrorKind::Config, "vocab: motion range needs at least 2 ids");
  require(max_target_length >= 1, ErrorKind::Config, "vocab: max_target_length must be >= 1");

  const int total = total_size();
  std::vector<int> owner(static_cast<std::size_t>(total), 0);
  auto claim = [&](TokenId id, const char* what) {
    require(id >= 0 && id < total, ErrorKind::Config,
            std::string("vocab: ") + what + " id " + std::to_string(id) + " outside [0, " +
                std::to_string(total) + ")");
    require(owner[static_cast<std::size_t>(id)]++ == 0, ErrorKind::Config,
            std::string("vocab: id ") + std::to_string(id) + " assigned twice (" + what + ")");
  };
  for (TokenId id : special.ids()) claim(id, "sentinel");
  const std::pair<const TokenRange*, const char*> ranges[] = {
      {&text, "text"}, {&audio, "audio"}, {&emotion, "emotion"}, {&motion, "motion"}};
  for (const auto& [range, name] : ranges)
    for (TokenId id = range->start; id < range->start + range->size; ++id) claim(id, name);
}

VocabSpec VocabSpec::standard(int text_size, int audio_size, int emotion_size, int motion_size,
                              int max_target_length) {
  VocabSpec v;
  TokenId next = static_cast<TokenId>(v.special.ids().size());
  v.text = {next, text_size};
  next += text_size;
  v.audio = {next, audio_size};
  next += audio_size;
  v.emotion = {next, emotion_size};
  next += emotion_size;
  v.motion = {next, motion_size};
  v.max_target_length = max_target_length;
  v.validate();
  return v;
}

namespace {

TokenRange range_from_json(const Json& j, const char* name) {
  const std::string path = std::string("vocab.ranges.") + name;
  reject_unknown_keys(j, {"start", "end"}, path);
  require(j.contains("start") && j.contains("end"), ErrorKind::Config,
          path + ": needs inclusive start and end");
  const auto start = value_or<TokenId>(j, "start", 0, path);
  const auto end = value_or<TokenId>(j, "end", 0, path);
  require(end >= start, ErrorKind::Config, path + ": end < start");
  return {start, end - start + 1};
}

}  // namespace

VocabSpec parse_vocab(std::string_view json_text) {
  const Json j = parse_json(json_text, ErrorKind::Config, "vocab file");
  reject_unknown_keys(j, {"ranges", "special", "max_target_length"}, "vocab");
  require(j.contains("ranges") && j.contains("special"), ErrorKind::Config,
          "vocab: needs 'ranges' and 'special'");
  const Json& r = j.at("ranges");
  reject_unknown_keys(r, {"text", "audio", "emotion", "motion"}, "vocab.ranges");
  VocabSpec v;
  for (const char* name : {"text", "audio", "emotion", "motion"})
    require(r.contains(name), ErrorKind::Config, std::string("vocab.ranges: missing ") + name);
  v.text = range_from_json(r.at("text"), "text");
  v.audio = range_from_json(r.at("audio"), "audio");
  v.emotion = range_from_json(r.at("emotion"), "emotion");
  v.motion = range_from_json(r.at("motion"), "motion");

  const Json& s = j.at("special");
  reject_unknown_keys(s,
                      {"pad", "begin_motion", "end_motion", "begin_audio", "end_audio",
                       "begin_emotion", "end_emotion", "unknown_emotion"},
                      "vocab.special");
  auto sentinel = [&](const char* key) {
    require(s.contains(key), ErrorKind::Config, std::string("vocab.special: missing ") + key);
    return value_or<TokenId>(s, key, 0, "vocab.special");
  };
  v.special.pad = sentinel("pad");
  v.special.begin_motion = sentinel("begin_motion");
  v.special.end_motion = sentinel("end_motion");
  v.special.begin_audio = sentinel("begin_audio");
  v.special.end_audio = sentinel("end_audio");
  v.special.begin_emotion = sentinel("begin_emotion");
  v.special.end_emotion = sentinel("end_emotion");
  v.special.unknown_emotion = sentinel("unknown_emotion");
  v.max_target_length = value_or<int>(j, "max_target_length", 256, "vocab");
  v.validate();
  return v;
}

std::string write_vocab(const VocabSpec& v) {
  auto range = [](const TokenRange& r) { return Json{{"start", r.start}, {"end", r.last()}}; };
  Json j;
  j["ranges"] = {{"text", range(v.text)},
                 {"audio", range(v.audio)},
                 {"emotion", range(v.emotion)},
                 {"motion", range(v.motion)}};
  j["special"] = {{"pad", v.special.pad},
                  {"begin_motion", v.special.begin_motion},
                  {"end_motion", v.special.end_motion},
                  {"begin_audio", v.special.begin_audio},
                  {"end_audio", v.special.end_audio},
                  {"begin_emotion", v.special.begin_emotion},
                  {"end_emotion", v.special.end_emotion},
                  {"unknown_emotion", v.special.unknown_emotion}};
  j["max_target_length"] = v.max_target_length;
  return j.dump(2) + "\n";
}

}  // namespace reactpref
