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

#include <string>
#include <string_view>

#include "reactpref/core/judge.hpp"
#include "reactpref/core/preference.hpp"

namespace reactpref {

// Binary checkpoints; see docs/checkpoint_format.md for the byte layout.

std::string encode_model_checkpoint(const PreferenceTrainingState& state);
PreferenceTrainingState decode_model_checkpoint(std::string_view bytes);

std::string encode_judge_checkpoint(const JudgeTrainingState& state, const JudgeDims& dims);
JudgeTrainingState decode_judge_checkpoint(std::string_view bytes, JudgeDims* dims = nullptr);

}  // namespace reactpref
