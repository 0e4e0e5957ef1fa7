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
#include <string>
#include <string_view>
#include <vector>

namespace reactpref {

using TokenId = std::int32_t;

enum class Modality : std::uint8_t { Text = 0, Audio = 1, Emotion = 2 };

inline constexpr std::array<Modality, 3> kModalities = {Modality::Text, Modality::Audio,
                                                        Modality::Emotion};

const char* modality_name(Modality m) noexcept;

/// Active-modality subset over {text, audio, emotion}.
class Mode {
 public:
  constexpr Mode() = default;
  static constexpr Mode from_bits(std::uint8_t bits) { return Mode(bits & 0x7u); }
  static constexpr Mode all() { return Mode(0x7u); }
  static constexpr Mode of(Modality m) { return Mode(bit(m)); }

  constexpr bool contains(Modality m) const { return (bits_ & bit(m)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  int size() const;

  constexpr Mode with(Modality m) const { return Mode(bits_ | bit(m)); }
  constexpr Mode without(Modality m) const { return Mode(bits_ & ~bit(m) & 0x7u); }

  /// Short form used on the command line and in reports: "T", "A+E", "T+A+E".
  std::string label() const;
  /// Accepts short labels ("T+A") or long names ("text+audio"), any order.
  static Mode parse(std::string_view text);
  std::vector<std::string> names() const;

  friend constexpr bool operator==(Mode a, Mode b) { return a.bits_ == b.bits_; }

 private:
  constexpr explicit Mode(std::uint8_t bits) : bits_(bits) {}
  static constexpr std::uint8_t bit(Modality m) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(m));
  }
  std::uint8_t bits_ = 0;
};

/// The six conditioning variants used for training and evaluation:
/// T, A, T+A, T+E, A+E, T+A+E.
const std::array<Mode, 6>& evaluation_modes();

/// Contiguous id range [start, start + size).
struct TokenRange {
  TokenId start = 0;
  TokenId size = 0;

  constexpr bool contains(TokenId id) const { return id >= start && id < start + size; }
  constexpr TokenId last() const { return start + size - 1; }
  constexpr int offset(TokenId id) const { return id - start; }
  constexpr TokenId at(int offset) const { return start + offset; }

  friend bool operator==(const TokenRange&, const TokenRange&) = default;
};

struct Sentinels {
  TokenId pad = 0;
  TokenId begin_motion = 1;
  TokenId end_motion = 2;
  TokenId begin_audio = 3;
  TokenId end_audio = 4;
  TokenId begin_emotion = 5;
  TokenId end_emotion = 6;
  TokenId unknown_emotion = 7;

  std::array<TokenId, 8> ids() const {
    return {pad, begin_motion, end_motion, begin_audio,
            end_audio, begin_emotion, end_emotion, unknown_emotion};
  }

  friend bool operator==(const Sentinels&, const Sentinels&) = default;
};

/// Unified vocabulary: sentinels plus disjoint text/audio/emotion/motion ranges
/// that exactly tile [0, total_size()).
struct VocabSpec {
  TokenRange text;
  TokenRange audio;
  TokenRange emotion;
  TokenRange motion;
  Sentinels special;
  int max_target_length = 256;

  int total_size() const;
  /// Throws Error(Config) when ranges overlap, leave gaps, or sentinels collide.
  void validate() const;

  /// Sentinels at 0..7 followed by text, audio, emotion, motion.
  static VocabSpec standard(int text_size, int audio_size, int emotion_size, int motion_size,
                            int max_target_length = 256);

  friend bool operator==(const VocabSpec&, const VocabSpec&) = default;
};

VocabSpec parse_vocab(std::string_view json_text);
std::string write_vocab(const VocabSpec& vocab);

}  // namespace reactpref
