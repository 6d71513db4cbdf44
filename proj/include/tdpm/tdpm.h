/* Copyright 2026 The tdpm Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to libtdpm. Objects are opaque handles owned by the caller and
 * released with the matching *_free. Every fallible call returns a
 * tdpm_status; on failure tdpm_last_error() describes the cause for the
 * calling thread. Strings returned through char** are released with
 * tdpm_string_free.
 */

#ifndef TDPM_TDPM_H
#define TDPM_TDPM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(TDPM_BUILDING)
#define TDPM_API __declspec(dllexport)
#else
#define TDPM_API __declspec(dllimport)
#endif
#else
#define TDPM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tdpm_status {
  TDPM_OK = 0,
  TDPM_ERR_INVALID_ARGUMENT = 1,
  TDPM_ERR_VALIDATION = 2,
  TDPM_ERR_DATA = 3,
  TDPM_ERR_IO = 4,
  TDPM_ERR_NUMERIC = 5,
  TDPM_ERR_INTERNAL = 6
} tdpm_status;

typedef enum tdpm_family { TDPM_GEOMETRIC = 0, TDPM_EXPONENTIAL = 1, TDPM_WEIBULL = 2 } tdpm_family;

typedef enum tdpm_init_mode {
  TDPM_INIT_UNIFORM_EPS = 0,
  TDPM_INIT_PROVIDED_LABELS = 1,
  TDPM_INIT_FREQUENCY_SEEDED = 2
} tdpm_init_mode;

typedef enum tdpm_predict_mode {
  TDPM_PREDICT_MIXTURE = 0,
  TDPM_PREDICT_ARGMAX = 1,
  TDPM_PREDICT_EMPIRICAL = 2,
  TDPM_PREDICT_MEDIAN = 3
} tdpm_predict_mode;

typedef struct tdpm_model tdpm_model;
typedef struct tdpm_dataset tdpm_dataset;

TDPM_API const char* tdpm_version(void);
/* Message of the last failed call on this thread; "" if none. */
TDPM_API const char* tdpm_last_error(void);
TDPM_API void tdpm_string_free(char* s);

/* ---- models ---- */

TDPM_API tdpm_status tdpm_model_load(const char* path, tdpm_model** out);
TDPM_API tdpm_status tdpm_model_save(const tdpm_model* model, const char* path);
TDPM_API tdpm_status tdpm_model_from_json(const char* text, tdpm_model** out);
TDPM_API tdpm_status tdpm_model_to_json(const tdpm_model* model, char** out);
TDPM_API void tdpm_model_free(tdpm_model* model);

/* TDPM_OK when valid, TDPM_ERR_VALIDATION otherwise. report (optional)
 * receives one issue per line. */
TDPM_API tdpm_status tdpm_model_validate(const tdpm_model* model, char** report);

typedef struct tdpm_model_info {
  int n_actions; /* including END */
  int n_classes;
  int r_minus;
  int r_plus;
  int family;
} tdpm_model_info;

TDPM_API tdpm_status tdpm_model_get_info(const tdpm_model* model, tdpm_model_info* out);

/* ---- datasets ---- */

/* vocab_from (optional) fixes the label vocabulary to a model's; unknown
 * labels are rejected unless extend_vocab is non-zero. */
TDPM_API tdpm_status tdpm_dataset_load(const char* path, const tdpm_model* vocab_from, int extend_vocab,
                                       tdpm_dataset** out);
TDPM_API tdpm_status tdpm_dataset_save(const tdpm_dataset* data, const char* path);
TDPM_API void tdpm_dataset_free(tdpm_dataset* data);
TDPM_API size_t tdpm_dataset_size(const tdpm_dataset* data);
TDPM_API tdpm_status tdpm_dataset_split(const tdpm_dataset* data, double train_frac, uint64_t seed,
                                        tdpm_dataset** train, tdpm_dataset** test);

/* ---- learning ---- */

typedef struct tdpm_fit_config {
  int n_classes;
  int r_minus;
  int r_plus;
  int family;
  int max_iters;
  double loglik_rel_tol;
  int min_iters;
  uint64_t seed;
  int init_mode;
  double epsilon;
  double alpha0;
  int time_in_em;
  double zero_time_floor;
} tdpm_fit_config;

TDPM_API void tdpm_fit_config_default(tdpm_fit_config* cfg);

/* trace_csv (optional) receives the per-iteration trace. */
TDPM_API tdpm_status tdpm_fit(const tdpm_dataset* data, const tdpm_fit_config* cfg, tdpm_model** out,
                              char** trace_csv);

/* Mean per-sequence log-likelihood of data under model. */
TDPM_API tdpm_status tdpm_mean_loglik(const tdpm_model* model, const tdpm_dataset* data, double* out);

/* ---- sampling ---- */

typedef struct tdpm_hyper_prior {
  double alpha_C;
  double alpha_A;
  double alpha_S_stay;
  double alpha_S_advance;
  double geometric_beta_a;
  double geometric_beta_b;
  double exponential_gamma_shape;
  double exponential_gamma_rate;
  double weibull_shape_lo;
  double weibull_shape_hi;
  double weibull_scale_lo;
  double weibull_scale_hi;
} tdpm_hyper_prior;

TDPM_API void tdpm_hyper_prior_default(tdpm_hyper_prior* h);

/* n_actions excludes END. hyper may be NULL for the defaults. */
TDPM_API tdpm_status tdpm_sample_model(int n_actions, int n_classes, int r_minus, int r_plus, int family,
                                       const tdpm_hyper_prior* hyper, uint64_t seed, tdpm_model** out);
TDPM_API tdpm_status tdpm_sample_dataset(const tdpm_model* model, size_t n, uint64_t seed, int complete,
                                         size_t max_len, tdpm_dataset** out);

/* ---- applications ---- */

typedef struct tdpm_predict_config {
  int mode;
  int n_samples;
  uint64_t seed;
  int use_time;
  int start_t;
} tdpm_predict_config;

TDPM_API void tdpm_predict_config_default(tdpm_predict_config* cfg);

/* tau_{t+1} from labels a_1..a_{t+1} and intervals tau_1..tau_t (t >= 1). */
TDPM_API tdpm_status tdpm_predict_next(const tdpm_model* model, const char* const* actions, const double* times,
                                       size_t t, const tdpm_predict_config* cfg, double* out);

/* Per-step predictions over data as CSV. train is required for the baseline
 * modes and optional otherwise. */
TDPM_API tdpm_status tdpm_predict(const tdpm_model* model, const tdpm_dataset* data, const tdpm_dataset* train,
                                  const tdpm_predict_config* cfg, char** csv);

/* overall, csv and top_pairs are each optional. */
TDPM_API tdpm_status tdpm_eval_mae(const tdpm_model* model, const tdpm_dataset* test, const tdpm_dataset* train,
                                   const tdpm_predict_config* cfg, double* overall, char** csv, char** top_pairs);

TDPM_API tdpm_status tdpm_classify(const tdpm_model* model, const tdpm_dataset* data, int use_time, char** csv);

/* Index into data, normalized score, and (optional) the sequence as JSONL
 * plus per-step annotations as CSV. */
TDPM_API tdpm_status tdpm_representative(const tdpm_model* model, const tdpm_dataset* data, int cls, int use_time,
                                         size_t* index, double* score, char** jsonl, char** annotations_csv);

/* Families are taken from the fit config and overridden per column. */
TDPM_API tdpm_status tdpm_mae_table(const tdpm_dataset* train, const tdpm_dataset* test,
                                    const tdpm_fit_config* fit, const tdpm_predict_config* predict, char** csv);

typedef struct tdpm_synthetic_config {
  int n_actions;
  int n_classes;
  int r_minus;
  int r_plus;
  /* Bit (1 << family) selects a family. */
  unsigned families_mask;
  const size_t* n_grid;
  size_t n_grid_len;
  size_t n_test;
  int n_seeds;
  uint64_t seed;
  size_t max_len;
  int complete;
  tdpm_fit_config fit;
} tdpm_synthetic_config;

/* Defaults: 10 actions, 2 classes, stages 3..4, all families, N grid
 * {300,...,3000}, 4000 test sequences, 5 seeds. n_grid points at static
 * storage. */
TDPM_API void tdpm_synthetic_config_default(tdpm_synthetic_config* cfg);

/* Called after each fit with the row just computed. */
typedef void (*tdpm_progress_fn)(const char* csv_row, void* user);

TDPM_API tdpm_status tdpm_synthetic_experiment(const tdpm_synthetic_config* cfg, tdpm_progress_fn progress,
                                               void* user, char** csv);

#ifdef __cplusplus
}
#endif

#endif /* TDPM_TDPM_H */
