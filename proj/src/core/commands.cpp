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

#include "reactpref/core/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

#include "reactpref/core/checkpoint.hpp"
#include "reactpref/core/hash.hpp"
#include "reactpref/core/oracle.hpp"

namespace fs = std::filesystem;

namespace reactpref {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x5eed));
}

namespace {

// ---------------------------------------------------------------------------
// config sections

Json optimizer_json(const OptimizerConfig& o) {
  return Json{{"learning_rate", o.learning_rate}, {"beta1", o.beta1},
              {"beta2", o.beta2},                 {"epsilon", o.epsilon},
              {"weight_decay", o.weight_decay},   {"warmup_steps", o.warmup_steps},
              {"total_steps", o.total_steps},     {"batch_size", o.batch_size},
              {"grad_accumulation", o.grad_accumulation}};
}

OptimizerConfig optimizer_from(const Json& j, OptimizerConfig o, const std::string& path) {
  expect_object(j, path);
  reject_unknown_keys(j,
                      {"learning_rate", "beta1", "beta2", "epsilon", "weight_decay",
                       "warmup_steps", "total_steps", "batch_size", "grad_accumulation"},
                      path);
  o.learning_rate = value_or<double>(j, "learning_rate", o.learning_rate, path);
  o.beta1 = value_or<double>(j, "beta1", o.beta1, path);
  o.beta2 = value_or<double>(j, "beta2", o.beta2, path);
  o.epsilon = value_or<double>(j, "epsilon", o.epsilon, path);
  o.weight_decay = value_or<double>(j, "weight_decay", o.weight_decay, path);
  o.warmup_steps = value_or<std::int64_t>(j, "warmup_steps", o.warmup_steps, path);
  o.total_steps = value_or<std::int64_t>(j, "total_steps", o.total_steps, path);
  o.batch_size = value_or<int>(j, "batch_size", o.batch_size, path);
  o.grad_accumulation = value_or<int>(j, "grad_accumulation", o.grad_accumulation, path);
  return o;
}

Json stop_json(const std::optional<std::int64_t>& s) { return s ? Json(*s) : Json(nullptr); }

std::optional<std::int64_t> stop_from(const Json& j, const std::string& path) {
  const auto it = j.find("stop_at");
  if (it == j.end() || it->is_null()) return std::nullopt;
  return value_or<std::int64_t>(j, "stop_at", 0, path);
}

const char* objective_name(TrainingObjective o) {
  return o == TrainingObjective::Preference ? "preference" : "cross_entropy";
}

TrainingObjective parse_objective(const std::string& s) {
  if (s == "preference") return TrainingObjective::Preference;
  if (s == "cross_entropy") return TrainingObjective::CrossEntropy;
  fail(ErrorKind::Config, "train.objective: expected preference or cross_entropy, got '" + s + "'");
}

const char* scorer_name(ScorerKind k) { return k == ScorerKind::Judge ? "judge" : "planted"; }

ScorerKind parse_scorer(const std::string& s, const char* path) {
  if (s == "judge") return ScorerKind::Judge;
  if (s == "planted") return ScorerKind::Planted;
  fail(ErrorKind::Config, std::string(path) + ": expected judge or planted, got '" + s + "'");
}

Mode parse_mode_config(const Json& j, const std::string& path) {
  require(j.is_string(), ErrorKind::Config, path + ": mode must be a string");
  try {
    return Mode::parse(j.get<std::string>());
  } catch (const Error& e) {
    fail(ErrorKind::Config, path + ": " + e.what());
  }
}

std::vector<double> doubles_from(const Json& j, const std::string& path) {
  require(j.is_array() && !j.empty(), ErrorKind::Config, path + ": expected a non-empty list");
  std::vector<double> out;
  for (const auto& v : j) {
    require(v.is_number(), ErrorKind::Config, path + ": expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

Json TrainSection::to_json() const {
  const PreferenceConfig& p = preference;
  return Json{{"dataset", dataset},
              {"vocab", vocab},
              {"dim", dim},
              {"init_scale", init_scale},
              {"objective", objective_name(p.objective)},
              {"margin", p.margin},
              {"lambda_rank", p.lambda_rank},
              {"lambda_gn", p.lambda_gn},
              {"samples_per_tier", p.samples_per_tier},
              {"modality_dropout_p", p.modality_dropout_p},
              {"frequency_reweighting", p.frequency_reweighting},
              {"optimizer", optimizer_json(p.optimizer)},
              {"resume_from", resume_from},
              {"stop_at", stop_json(stop_at)}};
}

TrainSection TrainSection::from_json(const Json& j) {
  const std::string path = "train";
  expect_object(j, path);
  reject_unknown_keys(j,
                      {"dataset", "vocab", "dim", "init_scale", "objective", "margin",
                       "lambda_rank", "lambda_gn", "samples_per_tier", "modality_dropout_p",
                       "frequency_reweighting", "optimizer", "resume_from", "stop_at"},
                      path);
  TrainSection s;
  PreferenceConfig& p = s.preference;
  s.dataset = value_or<std::string>(j, "dataset", s.dataset, path);
  s.vocab = value_or<std::string>(j, "vocab", s.vocab, path);
  s.dim = value_or<int>(j, "dim", s.dim, path);
  s.init_scale = value_or<double>(j, "init_scale", s.init_scale, path);
  p.objective = parse_objective(value_or<std::string>(j, "objective", "preference", path));
  p.margin = value_or<double>(j, "margin", p.margin, path);
  p.lambda_rank = value_or<double>(j, "lambda_rank", p.lambda_rank, path);
  p.lambda_gn = value_or<double>(j, "lambda_gn", p.lambda_gn, path);
  p.samples_per_tier = value_or<int>(j, "samples_per_tier", p.samples_per_tier, path);
  p.modality_dropout_p = value_or<double>(j, "modality_dropout_p", p.modality_dropout_p, path);
  p.frequency_reweighting =
      value_or<bool>(j, "frequency_reweighting", p.frequency_reweighting, path);
  if (j.contains("optimizer"))
    p.optimizer = optimizer_from(j.at("optimizer"), p.optimizer, path + ".optimizer");
  s.resume_from = value_or<std::string>(j, "resume_from", s.resume_from, path);
  s.stop_at = stop_from(j, path);
  require(s.dim >= 1, ErrorKind::Config, "train.dim must be >= 1");
  p.validate();
  return s;
}

Json JudgeSection::to_json() const {
  const JudgeTrainConfig& c = judge;
  Json positives = Json::array();
  for (Tier t : kTiers)
    if (c.loss.positives.contains(t)) positives.push_back(tier_name(t));
  return Json{{"dataset", dataset},
              {"vocab", vocab},
              {"dim", c.dims.dim},
              {"out_dim", c.dims.out_dim},
              {"init_scale", c.dims.init_scale},
              {"temperature", c.dims.temperature},
              {"lambda_fused", c.loss.lambda_fused},
              {"lambda_text", c.loss.lambda_text},
              {"lambda_audio", c.loss.lambda_audio},
              {"lambda_emotion", c.loss.lambda_emotion},
              {"beta", c.loss.beta},
              {"positives", positives},
              {"bank_size", c.bank_size},
              {"samples_per_tier", c.samples_per_tier},
              {"optimizer", optimizer_json(c.optimizer)},
              {"resume_from", resume_from},
              {"stop_at", stop_json(stop_at)}};
}

JudgeSection JudgeSection::from_json(const Json& j) {
  const std::string path = "train_judge";
  expect_object(j, path);
  reject_unknown_keys(j,
                      {"dataset", "vocab", "dim", "out_dim", "init_scale", "temperature",
                       "lambda_fused", "lambda_text", "lambda_audio", "lambda_emotion", "beta",
                       "positives", "bank_size", "samples_per_tier", "optimizer", "resume_from",
                       "stop_at"},
                      path);
  JudgeSection s;
  JudgeTrainConfig& c = s.judge;
  s.dataset = value_or<std::string>(j, "dataset", s.dataset, path);
  s.vocab = value_or<std::string>(j, "vocab", s.vocab, path);
  c.dims.dim = value_or<int>(j, "dim", c.dims.dim, path);
  c.dims.out_dim = value_or<int>(j, "out_dim", c.dims.out_dim, path);
  c.dims.init_scale = value_or<double>(j, "init_scale", c.dims.init_scale, path);
  c.dims.temperature = value_or<double>(j, "temperature", c.dims.temperature, path);
  c.loss.lambda_fused = value_or<double>(j, "lambda_fused", c.loss.lambda_fused, path);
  c.loss.lambda_text = value_or<double>(j, "lambda_text", c.loss.lambda_text, path);
  c.loss.lambda_audio = value_or<double>(j, "lambda_audio", c.loss.lambda_audio, path);
  c.loss.lambda_emotion = value_or<double>(j, "lambda_emotion", c.loss.lambda_emotion, path);
  c.loss.beta = value_or<double>(j, "beta", c.loss.beta, path);
  if (j.contains("positives")) {
    const Json& p = j.at("positives");
    require(p.is_array(), ErrorKind::Config, path + ".positives: expected a list of tiers");
    c.loss.positives = {false, false, false};
    for (const auto& t : p) {
      require(t.is_string(), ErrorKind::Config, path + ".positives: expected tier names");
      Tier tier;
      try {
        tier = parse_tier(t.get<std::string>());
      } catch (const Error& e) {
        fail(ErrorKind::Config, path + ".positives: " + e.what());
      }
      if (tier == Tier::Gold) c.loss.positives.gold = true;
      if (tier == Tier::Silver) c.loss.positives.silver = true;
      if (tier == Tier::Negative) c.loss.positives.negative = true;
    }
  }
  c.bank_size = value_or<int>(j, "bank_size", c.bank_size, path);
  c.samples_per_tier = value_or<int>(j, "samples_per_tier", c.samples_per_tier, path);
  if (j.contains("optimizer"))
    c.optimizer = optimizer_from(j.at("optimizer"), c.optimizer, path + ".optimizer");
  s.resume_from = value_or<std::string>(j, "resume_from", s.resume_from, path);
  s.stop_at = stop_from(j, path);
  c.validate();
  return s;
}

Json EvalSection::to_json() const {
  Json modes_j = Json::array();
  for (Mode m : modes) modes_j.push_back(m.label());
  return Json{{"dataset", dataset},
              {"vocab", vocab},
              {"model", model},
              {"judge", judge},
              {"world", world},
              {"split", split_name(split)},
              {"modes", modes_j},
              {"samples_per_group", eval.samples_per_group},
              {"gen_at_k", eval.gen_at_k},
              {"diversity_samples", eval.diversity_subset},
              {"aggregate", aggregate_name(eval.aggregate)},
              {"temperature", eval.temperature},
              {"exponential_gain", eval.exponential_gain},
              {"scorer", scorer_name(scorer)},
              {"features", scorer_name(features)},
              {"oracle", oracle}};
}

EvalSection EvalSection::from_json(const Json& j) {
  const std::string path = "eval";
  expect_object(j, path);
  reject_unknown_keys(j,
                      {"dataset", "vocab", "model", "judge", "world", "split", "modes",
                       "samples_per_group", "gen_at_k", "diversity_samples", "aggregate",
                       "temperature", "exponential_gain", "scorer", "features", "oracle"},
                      path);
  EvalSection s;
  s.dataset = value_or<std::string>(j, "dataset", s.dataset, path);
  s.vocab = value_or<std::string>(j, "vocab", s.vocab, path);
  s.model = value_or<std::string>(j, "model", s.model, path);
  s.judge = value_or<std::string>(j, "judge", s.judge, path);
  s.world = value_or<std::string>(j, "world", s.world, path);
  try {
    s.split = parse_split(value_or<std::string>(j, "split", "test", path));
    s.eval.aggregate = parse_aggregate(value_or<std::string>(j, "aggregate", "mean", path));
  } catch (const Error& e) {
    fail(ErrorKind::Config, path + ": " + e.what());
  }
  if (j.contains("modes")) {
    const Json& m = j.at("modes");
    require(m.is_array() && !m.empty(), ErrorKind::Config, "eval.modes: expected a non-empty list");
    for (const auto& x : m) s.modes.push_back(parse_mode_config(x, "eval.modes"));
  } else {
    s.modes.assign(evaluation_modes().begin(), evaluation_modes().end());
  }
  s.eval.samples_per_group = value_or<int>(j, "samples_per_group", s.eval.samples_per_group, path);
  s.eval.gen_at_k = value_or<int>(j, "gen_at_k", s.eval.gen_at_k, path);
  s.eval.diversity_subset = value_or<int>(j, "diversity_samples", s.eval.diversity_subset, path);
  s.eval.temperature = value_or<double>(j, "temperature", s.eval.temperature, path);
  s.eval.exponential_gain = value_or<bool>(j, "exponential_gain", s.eval.exponential_gain, path);
  s.scorer = parse_scorer(value_or<std::string>(j, "scorer", "judge", path), "eval.scorer");
  s.features = parse_scorer(value_or<std::string>(j, "features", "planted", path), "eval.features");
  s.oracle = value_or<bool>(j, "oracle", s.oracle, path);
  s.eval.validate();
  return s;
}

Json SweepSection::to_json() const {
  return Json{{"margins", margins}, {"lambda_ranks", lambda_ranks}, {"lambda_gns", lambda_gns},
              {"mode", mode.label()}, {"judge", judge},               {"jobs", jobs}};
}

SweepSection SweepSection::from_json(const Json& j) {
  const std::string path = "sweep";
  expect_object(j, path);
  reject_unknown_keys(j, {"margins", "lambda_ranks", "lambda_gns", "mode", "judge", "jobs"}, path);
  SweepSection s;
  if (j.contains("margins")) s.margins = doubles_from(j.at("margins"), path + ".margins");
  if (j.contains("lambda_ranks"))
    s.lambda_ranks = doubles_from(j.at("lambda_ranks"), path + ".lambda_ranks");
  if (j.contains("lambda_gns")) s.lambda_gns = doubles_from(j.at("lambda_gns"), path + ".lambda_gns");
  if (j.contains("mode")) s.mode = parse_mode_config(j.at("mode"), path + ".mode");
  s.judge = value_or<std::string>(j, "judge", s.judge, path);
  s.jobs = value_or<int>(j, "jobs", s.jobs, path);
  require(s.jobs >= 1, ErrorKind::Config, "sweep.jobs must be >= 1");
  return s;
}

RunConfig RunConfig::from_json(const Json& j) {
  expect_object(j, "config");
  reject_unknown_keys(j, {"seed", "output_dir", "synth", "train", "train_judge", "eval", "sweep"},
                      "config");
  RunConfig c;
  c.seed = value_or<std::uint64_t>(j, "seed", c.seed, "config");
  c.output_dir = value_or<std::string>(j, "output_dir", c.output_dir, "config");
  const Json empty = Json::object();
  const Json& synth = j.contains("synth") ? j.at("synth") : empty;
  c.synth = WorldConfig::from_json(synth);
  if (!synth.contains("seed")) c.synth.seed = c.seed;
  c.train = TrainSection::from_json(j.value("train", empty));
  c.train_judge = JudgeSection::from_json(j.value("train_judge", empty));
  c.eval = EvalSection::from_json(j.value("eval", empty));
  c.eval.eval.seed = c.seed;
  c.sweep = SweepSection::from_json(j.value("sweep", empty));
  return c;
}

void apply_override(Json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string_view::npos && eq > 0, ErrorKind::Config,
          "override '" + std::string(assignment) + "' must look like key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  if (!config.is_object()) config = Json::object();
  Json* node = &config;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    require(!part.empty(), ErrorKind::Config, "override key '" + key + "' has an empty segment");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    Json& child = (*node)[part];
    if (!child.is_object()) child = Json::object();
    node = &child;
    start = dot + 1;
  }
}

std::string report_file_name(Mode mode, bool oracle) {
  return std::string(oracle ? "oracle_report_" : "report_") + mode.label() + ".json";
}

Dataset load_dataset(const std::string& dataset_path, const std::string& vocab_path) {
  require(!dataset_path.empty(), ErrorKind::Config, "a dataset path is required");
  const fs::path vp = vocab_path.empty() ? fs::path(dataset_path).parent_path() / "vocab.json"
                                         : fs::path(vocab_path);
  const VocabSpec vocab = parse_vocab(read_text_file(vp));
  Dataset ds = parse_dataset(read_text_file(dataset_path), vocab);
  validate_dataset(ds);
  return ds;
}

namespace {

class Outputs {
 public:
  Outputs(fs::path dir, std::string command) : dir_(std::move(dir)), command_(std::move(command)) {}

  void write(const std::string& name, std::string_view content) {
    const fs::path p = dir_ / name;
    write_text_file(p, content);
    hashes_[name] = sha256_hex(content);
    paths_.push_back(p);
  }

  std::vector<fs::path> finish(const Json& config_echo) {
    write("config.json", config_echo.dump(2) + "\n");
    Json files = Json::object();
    for (const auto& [name, h] : hashes_) files[name] = h;
    const Json manifest{{"command", command_}, {"files", files}};
    const fs::path p = dir_ / "manifest.json";
    write_text_file(p, manifest.dump(2) + "\n");
    paths_.push_back(p);
    return paths_;
  }

 private:
  fs::path dir_;
  std::string command_;
  std::map<std::string, std::string> hashes_;
  std::vector<fs::path> paths_;
};

Json echo(const RunConfig& c, const char* section, Json body) {
  return Json{{"seed", c.seed}, {section, std::move(body)}};
}

std::vector<fs::path> cmd_synth(const RunConfig& c, Outputs& out) {
  const PlantedWorld world = generate_world(c.synth);
  out.write("dataset.jsonl", write_dataset(world.dataset));
  out.write("vocab.json", write_vocab(world.vocab));
  out.write("world.json", world.sidecar_json());
  return out.finish(echo(c, "synth", c.synth.to_json()));
}

PreferenceTrainingRun run_preference_training(const TrainSection& t, const Dataset& ds,
                                              std::uint64_t seed) {
  PreferenceTrainingState state;
  if (!t.resume_from.empty()) {
    state = decode_model_checkpoint(read_text_file(t.resume_from));
    require(state.params.vocab() == ds.vocab, ErrorKind::InvalidArgument,
            "checkpoint vocabulary does not match the dataset");
    require(state.params.dim() == t.dim, ErrorKind::Config,
            "train.dim differs from the checkpoint being resumed");
  } else {
    Rng init(derive_seed(seed, 1));
    state = PreferenceTrainingState::fresh(init_model(ds.vocab, t.dim, t.init_scale, init));
  }
  return train_preference(std::move(state), ds, t.preference, derive_seed(seed, 2), t.stop_at);
}

JudgeTrainingRun run_judge_training(const JudgeSection& s, const Dataset& ds, std::uint64_t seed) {
  JudgeTrainingState state;
  if (!s.resume_from.empty()) {
    state = decode_judge_checkpoint(read_text_file(s.resume_from));
    require(state.params.weights.vocab() == ds.vocab, ErrorKind::InvalidArgument,
            "checkpoint vocabulary does not match the dataset");
  } else {
    Rng init(derive_seed(seed, 3));
    state = JudgeTrainingState::fresh(init_judge(ds.vocab, s.judge.dims, init));
  }
  return train_judge(std::move(state), ds, s.judge, derive_seed(seed, 4), s.stop_at);
}

std::vector<fs::path> cmd_train(const RunConfig& c, Outputs& out) {
  const Dataset ds = load_dataset(c.train.dataset, c.train.vocab);
  const PreferenceTrainingRun run = run_preference_training(c.train, ds, c.seed);
  out.write("model.ckpt", encode_model_checkpoint(run.state));
  out.write("train_log.jsonl", to_jsonl(run.log));
  return out.finish(echo(c, "train", c.train.to_json()));
}

std::vector<fs::path> cmd_train_judge(const RunConfig& c, Outputs& out) {
  const Dataset ds = load_dataset(c.train_judge.dataset, c.train_judge.vocab);
  const JudgeTrainingRun run = run_judge_training(c.train_judge, ds, c.seed);
  out.write("judge.ckpt", encode_judge_checkpoint(run.state, c.train_judge.judge.dims));
  out.write("judge_log.jsonl", to_jsonl(run.log));
  return out.finish(echo(c, "train_judge", c.train_judge.to_json()));
}

fs::path sibling(const std::string& explicit_path, const std::string& dataset, const char* name) {
  if (!explicit_path.empty()) return explicit_path;
  return fs::path(dataset).parent_path() / name;
}

/// Loaded evaluation resources; the world and judge are only read when used.
struct EvalContext {
  Dataset dataset;
  std::optional<PlantedWorld> world;
  std::optional<JudgeParams> judge;
  std::unique_ptr<CandidateScorer> scorer;
  std::unique_ptr<FeatureMap> features;
};

std::unique_ptr<EvalContext> load_eval_context(const EvalSection& e,
                                               std::optional<JudgeParams> judge_override) {
  auto ctx = std::make_unique<EvalContext>();
  ctx->dataset = load_dataset(e.dataset, e.vocab);
  const bool need_world = e.scorer == ScorerKind::Planted || e.features == ScorerKind::Planted;
  const bool need_judge = e.scorer == ScorerKind::Judge || e.features == ScorerKind::Judge;
  if (need_world)
    ctx->world = PlantedWorld::from_sidecar(
        read_text_file(sibling(e.world, e.dataset, "world.json")), ctx->dataset);
  if (need_judge) {
    if (judge_override) {
      ctx->judge = std::move(*judge_override);
    } else {
      require(!e.judge.empty(), ErrorKind::Config, "eval.judge is required for the judge scorer");
      ctx->judge = decode_judge_checkpoint(read_text_file(e.judge)).params;
    }
    require(ctx->judge->weights.vocab() == ctx->dataset.vocab, ErrorKind::InvalidArgument,
            "judge vocabulary does not match the dataset");
  }
  if (e.scorer == ScorerKind::Judge)
    ctx->scorer = std::make_unique<JudgeScorer>(*ctx->judge);
  else
    ctx->scorer = std::make_unique<PlantedScorer>(*ctx->world);
  if (e.features == ScorerKind::Judge)
    ctx->features = std::make_unique<JudgeFeatureMap>(*ctx->judge);
  else
    ctx->features = std::make_unique<PlantedFeatureMap>(*ctx->world);
  return ctx;
}

Json report_json(const MetricsReport& r, const EvalSection& e, Mode mode, bool oracle) {
  MetricsReport copy = r;
  copy.config["split"] = split_name(e.split);
  copy.config["scorer"] = scorer_name(e.scorer);
  copy.config["features"] = scorer_name(e.features);
  copy.config["mode"] = mode.label();
  copy.config["source"] = oracle ? "oracle" : "evaluation";
  return copy.to_json();
}

std::vector<fs::path> cmd_eval(const RunConfig& c, Outputs& out) {
  const EvalSection& e = c.eval;
  require(!e.model.empty(), ErrorKind::Config, "eval.model is required");
  const auto ctx = load_eval_context(e, std::nullopt);
  const PreferenceTrainingState model = decode_model_checkpoint(read_text_file(e.model));
  require(model.params.vocab() == ctx->dataset.vocab, ErrorKind::InvalidArgument,
          "model vocabulary does not match the dataset");
  for (Mode mode : e.modes) {
    EvalConfig cfg = e.eval;
    cfg.mode = mode;
    const EvaluationResult res = evaluate_generation(model.params, *ctx->scorer, *ctx->features,
                                                     ctx->dataset.split(e.split), cfg);
    out.write(report_file_name(mode), report_json(res.report, e, mode, false).dump(2) + "\n");
    if (e.oracle) {
      Rng drng = diversity_rng(cfg.seed);
      MetricsReport ref = oracle::brute_force_metrics(res.groups, cfg.gen_at_k, cfg.aggregate,
                                                      &res.features, &drng, cfg.exponential_gain);
      ref.config = cfg.to_json();
      out.write(report_file_name(mode, true), report_json(ref, e, mode, true).dump(2) + "\n");
    }
  }
  return out.finish(echo(c, "eval", e.to_json()));
}

struct SweepCell {
  int index = 0;
  double margin = 0.0;
  double lambda_rank = 0.0;
  double lambda_gn = 0.0;
};

Json run_sweep_cell(const RunConfig& c, const SweepCell& cell, const Dataset& train_ds,
                    const EvalContext& ctx) {
  const std::uint64_t seed = derive_seed(c.seed, 1000 + static_cast<std::uint64_t>(cell.index));
  Json row{{"cell", cell.index},
           {"margin", cell.margin},
           {"lambda_rank", cell.lambda_rank},
           {"lambda_gn", cell.lambda_gn},
           {"seed", seed},
           {"mode", c.sweep.mode.label()}};
  try {
    TrainSection t = c.train;
    t.resume_from.clear();
    t.preference.margin = cell.margin;
    t.preference.lambda_rank = cell.lambda_rank;
    t.preference.lambda_gn = cell.lambda_gn;
    t.preference.validate();
    const PreferenceTrainingRun run = run_preference_training(t, train_ds, seed);
    EvalConfig cfg = c.eval.eval;
    cfg.mode = c.sweep.mode;
    cfg.seed = seed;
    const EvaluationResult res = evaluate_generation(run.state.params, *ctx.scorer, *ctx.features,
                                                     ctx.dataset.split(c.eval.split), cfg);
    Json report = res.report.to_json();
    report.erase("config");
    row.update(report);
    row["final_loss"] = run.log.empty() ? Json(nullptr) : Json(run.log.back().loss);
    row["status"] = "ok";
  } catch (const std::exception& ex) {
    row["status"] = "error";
    row["error"] = ex.what();
  }
  return row;
}

std::vector<fs::path> cmd_sweep(const RunConfig& c, Outputs& out) {
  const Dataset train_ds = load_dataset(c.train.dataset, c.train.vocab);
  std::optional<JudgeParams> judge;
  const bool need_judge =
      c.eval.scorer == ScorerKind::Judge || c.eval.features == ScorerKind::Judge;
  if (need_judge) {
    if (!c.sweep.judge.empty()) {
      judge = decode_judge_checkpoint(read_text_file(c.sweep.judge)).params;
    } else {
      JudgeSection js = c.train_judge;
      if (js.dataset.empty()) {
        js.dataset = c.train.dataset;
        js.vocab = c.train.vocab;
      }
      const Dataset jds = load_dataset(js.dataset, js.vocab);
      const JudgeTrainingRun run = run_judge_training(js, jds, c.seed);
      out.write("judge.ckpt", encode_judge_checkpoint(run.state, js.judge.dims));
      judge = run.state.params;
    }
  }
  EvalSection e = c.eval;
  if (e.dataset.empty()) {
    e.dataset = c.train.dataset;
    e.vocab = c.train.vocab;
  }
  const auto ctx = load_eval_context(e, std::move(judge));

  std::vector<SweepCell> cells;
  for (double m : c.sweep.margins)
    for (double lr : c.sweep.lambda_ranks)
      for (double lg : c.sweep.lambda_gns)
        cells.push_back({static_cast<int>(cells.size()), m, lr, lg});

  std::vector<Json> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++)
      rows[i] = run_sweep_cell(c, cells[i], train_ds, *ctx);
  };
  const int jobs = std::min<int>(c.sweep.jobs, static_cast<int>(cells.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  std::string table;
  for (const auto& r : rows) table += r.dump() + "\n";
  out.write("sweep.jsonl", table);

  Json body{{"sweep", c.sweep.to_json()},
            {"train", c.train.to_json()},
            {"eval", e.to_json()}};
  if (need_judge && c.sweep.judge.empty()) body["train_judge"] = c.train_judge.to_json();
  body["seed"] = c.seed;
  return out.finish(body);
}

}  // namespace

std::vector<fs::path> run_command(std::string_view command, const Json& config,
                                  const fs::path& out_dir) {
  const RunConfig c = RunConfig::from_json(config);
  require(!out_dir.empty(), ErrorKind::Config, "an output directory is required");
  Outputs out(out_dir, std::string(command));
  if (command == "synth") return cmd_synth(c, out);
  if (command == "train") return cmd_train(c, out);
  if (command == "train-judge") return cmd_train_judge(c, out);
  if (command == "eval") return cmd_eval(c, out);
  if (command == "sweep") return cmd_sweep(c, out);
  fail(ErrorKind::Config, "unknown command '" + std::string(command) + "'");
}

namespace {

std::string cell(const Json& v, int width) {
  char buf[64];
  if (v.is_number_float())
    std::snprintf(buf, sizeof buf, "%*.4f", width, v.get<double>());
  else if (v.is_null())
    std::snprintf(buf, sizeof buf, "%*s", width, "-");
  else if (v.is_string())
    std::snprintf(buf, sizeof buf, "%*s", width, v.get<std::string>().c_str());
  else
    std::snprintf(buf, sizeof buf, "%*s", width, v.dump().c_str());
  return buf;
}

}  // namespace

std::string render_report(const fs::path& path) {
  const std::string text = read_text_file(path);
  std::ostringstream os;
  if (path.extension() == ".jsonl") {
    const std::vector<std::string> cols = {"cell",       "margin",   "lambda_rank", "lambda_gn",
                                           "win_g_gt_n", "gen_at_k", "mrr_gold",    "ndcg_at_3",
                                           "fid",        "status"};
    for (const auto& c : cols) os << cell(c, 12);
    os << "\n";
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const Json row = parse_json(line, ErrorKind::Parse, path.string());
      for (const auto& c : cols) os << cell(row.value(c, Json(nullptr)), 12);
      os << "\n";
    }
    return os.str();
  }
  const Json doc = parse_json(text, ErrorKind::Parse, path.string());
  const MetricsReport r = MetricsReport::from_json(doc);
  const Json j = r.to_json();
  for (const auto& [k, v] : j.items()) {
    if (k == "config") continue;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%-12s", k.c_str());
    os << buf << cell(v, 10) << "\n";
  }
  os << "config      " << r.config.dump() << "\n";
  return os.str();
}

}  // namespace reactpref
