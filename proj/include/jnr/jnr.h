/* Copyright 2026 The JNR Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

/* C interface to libjnr.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every call that can fail returns a jnr_status; on failure a description
 * is available from jnr_last_error() on the same thread until the next
 * failing call. Strings returned by accessors stay valid until the owning
 * handle is freed or the accessor is called again on it.
 */

#ifndef JNR_JNR_H_
#define JNR_JNR_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define JNR_API __declspec(dllexport)
#else
#define JNR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum jnr_status {
  JNR_OK = 0,
  JNR_ERR_CONFIG = 1,
  JNR_ERR_IO = 2, /* unreadable, unwritable or malformed file */
  JNR_ERR_NUMERIC = 3,
  JNR_ERR_VERIFY = 4,
  JNR_ERR_DOMAIN = 5, /* bad argument */
  JNR_ERR_INTERNAL = 6
} jnr_status;

typedef enum jnr_mode { JNR_TOP1 = 0, JNR_TOP2 = 1 } jnr_mode;

typedef struct jnr_config jnr_config;
typedef struct jnr_dataset jnr_dataset;
typedef struct jnr_model jnr_model;
typedef struct jnr_report jnr_report;

JNR_API const char* jnr_last_error(void);
JNR_API const char* jnr_status_name(jnr_status status);

/* ---- labels and decision rules ---- */

/* out = {holistic, tens, ones, count} */
JNR_API jnr_status jnr_labels_from_number(int number, int out[4]);
/* 100 for degenerate input. */
JNR_API int jnr_compose_number(int tens, int ones, int count);
JNR_API jnr_status jnr_orientation_bin(double degrees, int* bin);
JNR_API jnr_status jnr_refine_digit_count(int tens, int count, double degrees, int* refined);

typedef struct jnr_decision {
  int holistic;
  int composed;
  int top1;
  int chose_holistic;
  int refined_count;
} jnr_decision;

/* argmax = {a1, a2, a3, a4}, max_prob = {p1, p2, p3}. */
JNR_API jnr_status jnr_decide(const int argmax[4], const double max_prob[3], double degrees,
                              int refine, int chance_normalized, jnr_decision* out);

/* ---- run configuration ---- */

JNR_API jnr_status jnr_config_load(const char* path, jnr_config** out);
JNR_API jnr_status jnr_config_parse(const char* json_text, jnr_config** out);
JNR_API void jnr_config_free(jnr_config* config);
JNR_API uint64_t jnr_config_seed(const jnr_config* config);
JNR_API int jnr_config_epochs(const jnr_config* config);
/* which: "dataset_dir", "checkpoint" or "report_dir"; NULL otherwise. */
JNR_API const char* jnr_config_path(jnr_config* config, const char* which);
/* <dataset_dir>/<split>.jnrd, or .csv when manifest is non-zero. */
JNR_API const char* jnr_config_split_path(jnr_config* config, const char* split, int manifest);
JNR_API jnr_status jnr_count_params(const jnr_config* config, uint64_t* out);
JNR_API jnr_status jnr_count_flops(const jnr_config* config, int batch_size, uint64_t* out);

/* Derives a named sub-stream ("gen", "init", "shuffle", "baseline") of seed. */
JNR_API uint64_t jnr_stream_seed(uint64_t seed, const char* name);

/* ---- datasets ---- */

JNR_API jnr_status jnr_generate(const jnr_config* config, jnr_dataset** train,
                                jnr_dataset** val, jnr_dataset** test);
JNR_API jnr_status jnr_dataset_load(const char* path, jnr_dataset** out);
JNR_API jnr_status jnr_dataset_save(const jnr_dataset* dataset, const char* path);
JNR_API jnr_status jnr_dataset_write_manifest(const jnr_dataset* dataset, const char* path);
JNR_API size_t jnr_dataset_size(const jnr_dataset* dataset);
/* labels = {holistic, tens, ones, count} */
JNR_API jnr_status jnr_dataset_sample(const jnr_dataset* dataset, size_t index, int labels[4],
                                      float* orientation);
JNR_API void jnr_dataset_free(jnr_dataset* dataset);

/* ---- training and checkpoints ---- */

typedef struct jnr_epoch {
  int epoch;
  double loss[4];
  double total_loss;
  double val_top1;
  double val_top2;
  double seconds;
} jnr_epoch;

typedef void (*jnr_epoch_fn)(const jnr_epoch* epoch, void* user);

/* The returned model holds the parameters of the best validation epoch. */
JNR_API jnr_status jnr_train(const jnr_config* config, const jnr_dataset* train,
                             const jnr_dataset* val, jnr_epoch_fn on_epoch, void* user,
                             jnr_model** out);
JNR_API jnr_status jnr_model_save(const jnr_model* model, const char* path);
JNR_API jnr_status jnr_model_load(const char* path, jnr_model** out);
/* JNR_ERR_IO when the checkpoint architecture differs from the config. */
JNR_API jnr_status jnr_model_check_config(const jnr_model* model, const jnr_config* config);
JNR_API jnr_status jnr_model_write_history(const jnr_model* model, const char* path);
/* 0 for loaded checkpoints, which carry no history. */
JNR_API int jnr_model_best_epoch(const jnr_model* model);
JNR_API void jnr_model_free(jnr_model* model);

/* ---- evaluation ---- */

JNR_API jnr_status jnr_evaluate(const jnr_model* model, const jnr_dataset* dataset,
                                jnr_mode mode, int refine, jnr_report** out);
JNR_API jnr_status jnr_random_baseline(const jnr_dataset* dataset, int trials, uint64_t seed,
                                       jnr_mode mode, int refine, jnr_report** out);
/* CSV rows a1,p1,a2,p2,a3,p3,a4,orientation_deg,ground_truth */
JNR_API jnr_status jnr_score_predictions(const char* csv_path, jnr_mode mode, int refine,
                                         jnr_report** out);
JNR_API double jnr_report_accuracy(const jnr_report* report);
JNR_API double jnr_report_precision(const jnr_report* report);
JNR_API double jnr_report_recall(const jnr_report* report);
JNR_API double jnr_report_f1(const jnr_report* report);
JNR_API uint64_t jnr_report_total(const jnr_report* report);
JNR_API jnr_status jnr_report_write_json(const jnr_report* report, const char* path);
JNR_API const char* jnr_report_table(jnr_report* report, const char* method);
JNR_API void jnr_report_free(jnr_report* report);

/* ---- ablation ---- */

typedef struct jnr_ablation_row {
  const char* cell;
  int batch_size;
  double alpha[4];
  uint64_t params;
  uint64_t flops;
  double val_top2;
  int ok;
  const char* error; /* empty when ok */
} jnr_ablation_row;

typedef void (*jnr_ablation_fn)(const jnr_ablation_row* row, void* user);

/* grid: "weights" or "backbone". Failed cells are reported, not fatal. */
JNR_API jnr_status jnr_ablate(const jnr_config* config, const char* grid,
                              const jnr_dataset* train, const jnr_dataset* val,
                              const char* csv_path, jnr_ablation_fn on_row, void* user);

/* ---- gradient check ---- */

typedef struct jnr_gradcheck_result {
  double max_rel_error;
  char worst_tensor[64];
  size_t worst_index;
  double worst_analytic;
  double worst_numeric;
  int n_probes;
  char probed_layers[512]; /* comma separated */
} jnr_gradcheck_result;

/* Finite-difference check on the built-in tiny network using the config's
 * seed and loss weights (defaults when config is NULL). Returns
 * JNR_ERR_VERIFY when max_rel_error >= 1e-4; out is filled either way. */
JNR_API jnr_status jnr_gradcheck(const jnr_config* config, int n_probes, int corrupt,
                                 jnr_gradcheck_result* out);

#ifdef __cplusplus
}
#endif

#endif /* JNR_JNR_H_ */
