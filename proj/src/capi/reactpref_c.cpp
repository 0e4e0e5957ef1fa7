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

#include "reactpref/reactpref.h"

#include <cstring>
#include <string>

#include "reactpref/core/checkpoint.hpp"
#include "reactpref/core/commands.hpp"
#include "reactpref/core/metrics.hpp"
#include "reactpref/core/preference.hpp"

using namespace reactpref;

struct rp_dataset {
  Dataset dataset;
};
struct rp_model {
  PreferenceTrainingState state;
};
struct rp_judge {
  JudgeTrainingState state;
};

namespace {

thread_local std::string g_last_error;

rp_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return RP_ERR_INVALID_ARGUMENT;
    case ErrorKind::Config: return RP_ERR_CONFIG;
    case ErrorKind::Parse: return RP_ERR_PARSE;
    case ErrorKind::Io: return RP_ERR_IO;
    case ErrorKind::Numeric: return RP_ERR_NUMERIC;
    case ErrorKind::Runtime: break;
  }
  return RP_ERR_RUNTIME;
}

template <class F>
rp_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return RP_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RP_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return RP_ERR_RUNTIME;
  }
}

void need(const void* p, const char* what) {
  require(p != nullptr, ErrorKind::InvalidArgument, std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  require(out != nullptr, ErrorKind::Runtime, "out of memory");
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

Split split_of(rp_split s) {
  require(s == RP_SPLIT_TRAIN || s == RP_SPLIT_VAL || s == RP_SPLIT_TEST,
          ErrorKind::InvalidArgument, "unknown split");
  return static_cast<Split>(s);
}

const Group& group_at(const rp_dataset* ds, rp_split split, std::size_t index) {
  need(ds, "dataset");
  const auto& groups = ds->dataset.split(split_of(split));
  require(index < groups.size(), ErrorKind::InvalidArgument,
          "group index " + std::to_string(index) + " out of range");
  return groups[index];
}

}  // namespace

extern "C" {

const char* rp_version(void) { return "0.1.0"; }

const char* rp_last_error(void) { return g_last_error.c_str(); }

const char* rp_status_name(rp_status status) {
  switch (status) {
    case RP_OK: return "ok";
    case RP_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case RP_ERR_CONFIG: return "config";
    case RP_ERR_PARSE: return "parse";
    case RP_ERR_IO: return "io";
    case RP_ERR_NUMERIC: return "numeric";
    case RP_ERR_RUNTIME: return "runtime";
  }
  return "unknown";
}

void rp_string_free(char* s) { std::free(s); }

rp_status rp_run_command(const char* command, const char* config_json, const char* output_dir) {
  return guarded([&] {
    need(command, "command");
    need(config_json, "config_json");
    need(output_dir, "output_dir");
    run_command(command, parse_json(config_json, ErrorKind::Config, "configuration"), output_dir);
  });
}

rp_status rp_config_override(const char* config_json, const char* assignment, char** out_json) {
  return guarded([&] {
    need(config_json, "config_json");
    need(assignment, "assignment");
    need(out_json, "out_json");
    Json j = parse_json(config_json, ErrorKind::Config, "configuration");
    apply_override(j, assignment);
    *out_json = dup_string(j.dump());
  });
}

rp_status rp_render_report(const char* path, char** out_text) {
  return guarded([&] {
    need(path, "path");
    need(out_text, "out_text");
    *out_text = dup_string(render_report(path));
  });
}

rp_status rp_dataset_load(const char* dataset_path, const char* vocab_path, rp_dataset** out) {
  return guarded([&] {
    need(dataset_path, "dataset_path");
    need(out, "out");
    *out = new rp_dataset{load_dataset(dataset_path, vocab_path ? vocab_path : "")};
  });
}

rp_status rp_dataset_group_count(const rp_dataset* ds, rp_split split, size_t* out) {
  return guarded([&] {
    need(ds, "dataset");
    need(out, "out");
    *out = ds->dataset.split(split_of(split)).size();
  });
}

void rp_dataset_free(rp_dataset* ds) { delete ds; }

rp_status rp_model_init(const rp_dataset* ds, int dim, double init_scale, uint64_t seed,
                        rp_model** out) {
  return guarded([&] {
    need(ds, "dataset");
    need(out, "out");
    require(dim >= 1, ErrorKind::InvalidArgument, "dim must be >= 1");
    Rng rng(seed);
    *out = new rp_model{
        PreferenceTrainingState::fresh(init_model(ds->dataset.vocab, dim, init_scale, rng))};
  });
}

rp_status rp_model_load(const char* path, rp_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new rp_model{decode_model_checkpoint(read_text_file(path))};
  });
}

rp_status rp_model_save(const rp_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    write_text_file(path, encode_model_checkpoint(model->state));
  });
}

rp_status rp_model_step(const rp_model* model, int64_t* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = model->state.step;
  });
}

rp_status rp_model_tier_scores(const rp_model* model, const rp_dataset* ds, rp_split split,
                               size_t group_index, double out[3]) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    const Group& g = group_at(ds, split, group_index);
    require(model->state.params.vocab() == ds->dataset.vocab, ErrorKind::InvalidArgument,
            "model vocabulary does not match the dataset");
    const TierScores t = group_tier_scores(model->state.params, g);
    out[0] = t.gold;
    out[1] = t.silver;
    out[2] = t.negative;
  });
}

void rp_model_free(rp_model* model) { delete model; }

rp_status rp_judge_load(const char* path, rp_judge** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new rp_judge{decode_judge_checkpoint(read_text_file(path))};
  });
}

rp_status rp_judge_score(const rp_judge* judge, const rp_dataset* ds, rp_split split,
                         size_t group_index, size_t candidate_index, const char* mode,
                         double* out) {
  return guarded([&] {
    need(judge, "judge");
    need(mode, "mode");
    need(out, "out");
    const Group& g = group_at(ds, split, group_index);
    require(candidate_index < g.candidates.size(), ErrorKind::InvalidArgument,
            "candidate index out of range");
    require(judge->state.params.weights.vocab() == ds->dataset.vocab, ErrorKind::InvalidArgument,
            "judge vocabulary does not match the dataset");
    *out = judge_score(judge->state.params, g.condition, g.candidates[candidate_index].motion,
                       Mode::parse(mode));
  });
}

void rp_judge_free(rp_judge* judge) { delete judge; }

rp_status rp_ranking_loss(double gold, double silver, double negative, double margin,
                          double lambda_gn, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = ranking_loss({gold, silver, negative}, margin, lambda_gn);
  });
}

rp_status rp_aggregate_tier(const double* logliks, size_t n, double* out) {
  return guarded([&] {
    need(logliks, "logliks");
    need(out, "out");
    *out = aggregate_tier({logliks, n});
  });
}

rp_status rp_item_weight(int64_t frequency, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = item_weight(frequency);
  });
}

rp_status rp_kappa(double u, double v, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = kappa(u, v);
  });
}

rp_status rp_frechet_distance(size_t dim, const double* mean_real, const double* cov_real,
                              const double* mean_gen, const double* cov_gen, double* out) {
  return guarded([&] {
    need(mean_real, "mean_real");
    need(cov_real, "cov_real");
    need(mean_gen, "mean_gen");
    need(cov_gen, "cov_gen");
    need(out, "out");
    const auto d = static_cast<Eigen::Index>(dim);
    using Row = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    *out = frechet_distance(Eigen::Map<const Eigen::VectorXd>(mean_real, d),
                            Eigen::MatrixXd(Eigen::Map<const Row>(cov_real, d, d)),
                            Eigen::Map<const Eigen::VectorXd>(mean_gen, d),
                            Eigen::MatrixXd(Eigen::Map<const Row>(cov_gen, d, d)));
  });
}

}  // extern "C"
