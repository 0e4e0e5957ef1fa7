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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reactpref/core/evaluate.hpp"
#include "reactpref/core/json_util.hpp"
#include "reactpref/core/judge.hpp"
#include "reactpref/core/preference.hpp"
#include "reactpref/core/synthetic.hpp"

namespace reactpref {

struct TrainSection {
  std::string dataset;
  std::string vocab;  // defaults to vocab.json next to the dataset
  int dim = 16;
  double init_scale = 0.1;
  PreferenceConfig preference;
  std::string resume_from;
  std::optional<std::int64_t> stop_at;

  Json to_json() const;
  static TrainSection from_json(const Json& j);
};

struct JudgeSection {
  std::string dataset;
  std::string vocab;
  JudgeTrainConfig judge;
  std::string resume_from;
  std::optional<std::int64_t> stop_at;

  Json to_json() const;
  static JudgeSection from_json(const Json& j);
};

enum class ScorerKind { Judge, Planted };

struct EvalSection {
  std::string dataset;
  std::string vocab;
  std::string model;
  std::string judge;
  std::string world;  // defaults to world.json next to the dataset
  Split split = Split::Test;
  std::vector<Mode> modes;  // defaults to all six evaluation modes
  EvalConfig eval;
  ScorerKind scorer = ScorerKind::Judge;
  ScorerKind features = ScorerKind::Planted;
  bool oracle = false;

  Json to_json() const;
  static EvalSection from_json(const Json& j);
};

struct SweepSection {
  std::vector<double> margins = {0.0, 0.5, 1.0, 2.0};
  std::vector<double> lambda_ranks = {0.0, 0.25, 0.5, 1.0};
  std::vector<double> lambda_gns = {0.0, 0.25, 0.5, 1.0};
  Mode mode = Mode::all();
  std::string judge;  // trained from the train_judge section when empty
  int jobs = 1;

  Json to_json() const;
  static SweepSection from_json(const Json& j);
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir;
  WorldConfig synth;
  TrainSection train;
  JudgeSection train_judge;
  EvalSection eval;
  SweepSection sweep;

  /// Rejects unknown keys anywhere in the document (Config error).
  static RunConfig from_json(const Json& j);
};

/// Applies one "dotted.key=value" override; the value is read as JSON when it
/// parses, otherwise as a string.
void apply_override(Json& config, std::string_view assignment);

inline constexpr std::array<const char*, 5> kCommands = {"synth", "train", "train-judge", "eval",
                                                         "sweep"};

/// Runs one command, writing its outputs plus config.json and manifest.json
/// into `out_dir`. Returns the paths written.
std::vector<std::filesystem::path> run_command(std::string_view command, const Json& config,
                                               const std::filesystem::path& out_dir);

/// Human-readable rendering of a report JSON or a sweep JSONL file.
std::string render_report(const std::filesystem::path& path);

/// File name used for the report of one mode, e.g. "report_T+A.json".
std::string report_file_name(Mode mode, bool oracle = false);

/// Seed helpers shared by commands and tests.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

Dataset load_dataset(const std::string& dataset_path, const std::string& vocab_path);

}  // namespace reactpref
