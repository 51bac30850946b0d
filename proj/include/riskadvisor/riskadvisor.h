/*
 * Copyright 2026 The Risk Advisor Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to the risk advisor library.
 *
 * Objects are opaque handles released with their *_free function. Every
 * fallible call returns an ra_status; on failure ra_last_error() describes
 * the problem (per thread, valid until the next failing call on that
 * thread). Strings returned through char** are owned by the caller and
 * released with ra_string_free. Boolean arrays use one unsigned char per
 * element (0 or 1). Matrices are row-major.
 */

#ifndef RISKADVISOR_RISKADVISOR_H_
#define RISKADVISOR_RISKADVISOR_H_

#include <stddef.h>
#include <stdint.h>

#if defined(RA_BUILDING_LIBRARY)
#define RA_API __attribute__((visibility("default")))
#else
#define RA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ra_status {
  RA_OK = 0,
  RA_ERR_CONFIG = 2,
  RA_ERR_DATA = 3,
  RA_ERR_NUMERIC = 4,
  RA_ERR_IO = 5,
  RA_ERR_INTERNAL = 6
} ra_status;

typedef enum ra_orientation {
  RA_HIGHER_IS_POSITIVE = 0,
  RA_LOWER_IS_POSITIVE = 1
} ra_orientation;

typedef struct ra_dataset ra_dataset;
typedef struct ra_bbox ra_bbox;
typedef struct ra_advisor ra_advisor;
typedef struct ra_report ra_report;
typedef struct ra_trust ra_trust;

RA_API const char* ra_version(void);
RA_API const char* ra_last_error(void);
RA_API void ra_string_free(char* s);

/* ---- datasets ---- */

RA_API ra_status ra_dataset_gen_circles(size_t n, double noise_sd, uint64_t seed, ra_dataset** out);
RA_API ra_status ra_dataset_gen_moons(size_t n, double noise_sd, uint64_t seed, ra_dataset** out);
/* params_json may be NULL; keys mean_a0, mean_a1, mean_b, sd, label_b. */
RA_API ra_status ra_dataset_gen_gmm_shift(size_t n_train, size_t n_test, uint64_t seed,
                                          const char* params_json, ra_dataset** train,
                                          ra_dataset** test);
/* is_ood may be NULL. */
RA_API ra_status ra_dataset_from_arrays(const double* features, size_t rows, size_t cols,
                                        const int* labels, int class_count,
                                        const unsigned char* is_ood, ra_dataset** out);
/* ood_column may be NULL. */
RA_API ra_status ra_dataset_load_csv(const char* path, const char* label_column,
                                     const char* ood_column, ra_dataset** out);
RA_API ra_status ra_dataset_save_csv(const ra_dataset* d, const char* path);
RA_API ra_status ra_dataset_split(const ra_dataset* d, double train_fraction, int stratified,
                                  uint64_t seed, ra_dataset** train, ra_dataset** test);
/* Fits on train and applies the same map to train and each of others. */
RA_API ra_status ra_dataset_standardize(ra_dataset* train, ra_dataset** others, size_t n_others);
/* Rows of b appended after a. */
RA_API ra_status ra_dataset_concat(const ra_dataset* a, const ra_dataset* b, ra_dataset** out);
RA_API size_t ra_dataset_rows(const ra_dataset* d);
RA_API size_t ra_dataset_cols(const ra_dataset* d);
RA_API int ra_dataset_class_count(const ra_dataset* d);
RA_API int ra_dataset_has_ood(const ra_dataset* d);
RA_API ra_status ra_dataset_features(const ra_dataset* d, double* out);
RA_API ra_status ra_dataset_labels(const ra_dataset* d, int* out);
RA_API ra_status ra_dataset_ood(const ra_dataset* d, unsigned char* out);
RA_API void ra_dataset_free(ra_dataset* d);

/* ---- black-box models ---- */

/* spec_json keys: kind ("logistic" | "mlp"), l2, epochs, lr, hidden, batch_size, seed. */
RA_API ra_status ra_bbox_train(const ra_dataset* train, const char* spec_json, ra_bbox** out);
/* CSV with a pred_label column and optional proba_<k> columns. */
RA_API ra_status ra_bbox_load_external(const char* path, int class_count, ra_bbox** out);
RA_API ra_status ra_bbox_load(const char* path, ra_bbox** out);
RA_API ra_status ra_bbox_save(const ra_bbox* m, const char* path);
RA_API int ra_bbox_class_count(const ra_bbox* m);
RA_API int ra_bbox_has_probabilities(const ra_bbox* m);
/* labels_out has rows entries; proba_out (may be NULL) rows * class_count. */
RA_API ra_status ra_bbox_predict(const ra_bbox* m, const ra_dataset* d, int* labels_out,
                                 double* proba_out);
RA_API void ra_bbox_free(ra_bbox* m);

RA_API ra_status ra_error_indicator(const int* labels_true, const int* labels_pred, size_t n,
                                    unsigned char* z_out, double* positive_rate);

/* ---- advisor ---- */

/* params_json keys: n_trees, max_depth, learning_rate, sample_rate,
 * min_samples_leaf, seed, members, weights {model, epistemic, aleatoric}.
 * Targets are the black box's errors on train. */
RA_API ra_status ra_advisor_fit(const ra_dataset* train, const ra_bbox* bbox, const char* params_json,
                                ra_advisor** out);
RA_API ra_status ra_advisor_fit_targets(const double* features, size_t rows, size_t cols,
                                        const unsigned char* z, const char* params_json,
                                        ra_advisor** out);
/* grid_json keys: max_depth, sample_rate, n_trees, folds (all optional).
 * The result document has "best" and "cells". */
RA_API ra_status ra_advisor_grid_search(const ra_dataset* train, const ra_bbox* bbox,
                                        const char* params_json, const char* grid_json,
                                        char** result_json);
RA_API ra_status ra_advisor_load(const char* path, ra_advisor** out);
RA_API ra_status ra_advisor_save(const ra_advisor* a, const char* path);
RA_API size_t ra_advisor_members(const ra_advisor* a);
RA_API ra_status ra_advisor_set_weights(ra_advisor* a, double model, double epistemic, double aleatoric);
RA_API ra_status ra_advisor_decompose(const ra_advisor* a, const ra_dataset* d, ra_report** out);
RA_API void ra_advisor_free(ra_advisor* a);
/* weights3 may be NULL for equal weights. */
RA_API ra_status ra_decompose_probabilities(const double* member_probs, size_t rows, size_t members,
                                            const double* weights3, ra_report** out);

RA_API size_t ra_report_rows(const ra_report* r);
RA_API size_t ra_report_members(const ra_report* r);
/* field: error_prob, total, aleatoric, epistemic or risk_score. */
RA_API ra_status ra_report_field(const ra_report* r, const char* field, double* out);
RA_API ra_status ra_report_member_probs(const ra_report* r, double* out);
RA_API ra_status ra_report_save_csv(const ra_report* r, const char* path, int include_members);
RA_API ra_status ra_report_load_csv(const char* path, ra_report** out);
RA_API void ra_report_free(ra_report* r);

/* ---- baselines ---- */

RA_API ra_status ra_mcp_confidence(const double* proba, size_t rows, size_t classes, double* out);
RA_API ra_status ra_trust_fit(const ra_dataset* train, double alpha, size_t k_density, ra_trust** out);
RA_API ra_status ra_trust_score(const ra_trust* t, const ra_dataset* d, const int* predicted_labels,
                                double* out);
RA_API void ra_trust_free(ra_trust* t);

/* ---- metrics ---- */

RA_API ra_status ra_auroc(const double* scores, const unsigned char* positives, size_t n,
                          ra_orientation orientation, double* out);
RA_API ra_status ra_average_precision(const double* scores, const unsigned char* positives, size_t n,
                                      ra_orientation orientation, double* out);
RA_API ra_status ra_prr(const double* scores, const unsigned char* errors, size_t n,
                        ra_orientation orientation, double* out);
/* {"rejection_fractions": [...], "accuracies": [...], "prr": x} */
RA_API ra_status ra_ar_curve(const double* scores, const unsigned char* errors, size_t n,
                             double grid_step, ra_orientation orientation, char** json_out);

/* ---- orchestration ---- */

RA_API ra_status ra_config_defaults(char** json_out);
/* output_dir may be NULL and repeats 0 to keep the config's values. A
 * manifest.json document is accepted as a config. */
RA_API ra_status ra_run_scenario(const char* config_json, const char* output_dir, size_t repeats,
                                 char** metrics_json);
/* what: "failure", "ood" or "abstention". trust may be NULL. */
RA_API ra_status ra_evaluate(const ra_dataset* test, const ra_bbox* bbox, const ra_advisor* advisor,
                             const ra_trust* trust, const char* what, double grid_step,
                             char** json_out);
/* request_json keys: strategy, k_percent, rounds, with_replacement, seed,
 * bbox {spec as ra_bbox_train}, advisor {as ra_advisor_fit}, trust {alpha, k}. */
RA_API ra_status ra_sample_retrain(const ra_dataset* train, const ra_dataset* pool,
                                   const ra_dataset* test, const char* request_json,
                                   char** curve_json, char** curve_csv);
/* kind: bbox_proba, error_prob, aleatoric, epistemic or risk. bounds4 is
 * {xmin, xmax, ymin, ymax}; when NULL bounds come from bounds_data. svg_out
 * may be NULL. */
RA_API ra_status ra_emit_grid(const char* kind, const ra_bbox* bbox, const ra_advisor* advisor,
                              const double* bounds4, const ra_dataset* bounds_data, size_t resolution,
                              char** csv_out, char** svg_out);
/* Writes through a temporary file and rename. */
RA_API ra_status ra_write_file(const char* path, const char* contents);

#ifdef __cplusplus
}
#endif

#endif /* RISKADVISOR_RISKADVISOR_H_ */
