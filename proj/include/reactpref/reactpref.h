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

/* C interface to the reactpref library.
 *
 * Every function returns an rp_status. On failure a message is available from
 * rp_last_error() on the same thread until the next call. Strings returned
 * through char** out-parameters are owned by the caller and released with
 * rp_string_free. Handles are released with their matching *_free function.
 */
#ifndef REACTPREF_REACTPREF_H
#define REACTPREF_REACTPREF_H

#include <stddef.h>
#include <stdint.h>

#if defined(REACTPREF_BUILDING_LIBRARY)
#define RP_API __attribute__((visibility("default")))
#else
#define RP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rp_status {
  RP_OK = 0,
  RP_ERR_INVALID_ARGUMENT = 1,
  RP_ERR_CONFIG = 2,
  RP_ERR_PARSE = 3,
  RP_ERR_IO = 4,
  RP_ERR_NUMERIC = 5,
  RP_ERR_RUNTIME = 6
} rp_status;

typedef enum rp_split { RP_SPLIT_TRAIN = 0, RP_SPLIT_VAL = 1, RP_SPLIT_TEST = 2 } rp_split;

typedef struct rp_dataset rp_dataset;
typedef struct rp_model rp_model;
typedef struct rp_judge rp_judge;

RP_API const char* rp_version(void);
RP_API const char* rp_last_error(void);
RP_API const char* rp_status_name(rp_status status);
RP_API void rp_string_free(char* s);

/* Commands. `config_json` is a full run configuration; `output_dir` receives
 * the outputs, a config echo and a manifest of content hashes. */
RP_API rp_status rp_run_command(const char* command, const char* config_json,
                                const char* output_dir);
/* Applies a "dotted.key=value" override and returns the new document. */
RP_API rp_status rp_config_override(const char* config_json, const char* assignment,
                                    char** out_json);
RP_API rp_status rp_render_report(const char* path, char** out_text);

/* Datasets. `vocab_path` may be NULL to use vocab.json next to the dataset. */
RP_API rp_status rp_dataset_load(const char* dataset_path, const char* vocab_path,
                                 rp_dataset** out);
RP_API rp_status rp_dataset_group_count(const rp_dataset* ds, rp_split split, size_t* out);
RP_API void rp_dataset_free(rp_dataset* ds);

/* Generator checkpoints. */
RP_API rp_status rp_model_init(const rp_dataset* ds, int dim, double init_scale, uint64_t seed,
                               rp_model** out);
RP_API rp_status rp_model_load(const char* path, rp_model** out);
RP_API rp_status rp_model_save(const rp_model* model, const char* path);
RP_API rp_status rp_model_step(const rp_model* model, int64_t* out);
/* Aggregated (gold, silver, negative) log-likelihood scores of one group. */
RP_API rp_status rp_model_tier_scores(const rp_model* model, const rp_dataset* ds, rp_split split,
                                      size_t group_index, double out[3]);
RP_API void rp_model_free(rp_model* model);

/* Judge checkpoints. `mode` is a label such as "T+A". */
RP_API rp_status rp_judge_load(const char* path, rp_judge** out);
RP_API rp_status rp_judge_score(const rp_judge* judge, const rp_dataset* ds, rp_split split,
                                size_t group_index, size_t candidate_index, const char* mode,
                                double* out);
RP_API void rp_judge_free(rp_judge* judge);

/* Scalar helpers. */
RP_API rp_status rp_ranking_loss(double gold, double silver, double negative, double margin,
                                 double lambda_gn, double* out);
RP_API rp_status rp_aggregate_tier(const double* logliks, size_t n, double* out);
RP_API rp_status rp_item_weight(int64_t frequency, double* out);
RP_API rp_status rp_kappa(double u, double v, double* out);
/* Covariances are row-major dim x dim. */
RP_API rp_status rp_frechet_distance(size_t dim, const double* mean_real, const double* cov_real,
                                     const double* mean_gen, const double* cov_gen, double* out);

#ifdef __cplusplus
}
#endif

#endif /* REACTPREF_REACTPREF_H */
