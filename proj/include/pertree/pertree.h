/* C interface to the pertree library. All functions are thread-safe with
 * respect to distinct handles. Strings returned through char** must be
 * released with pertree_string_free. On failure the message for the calling
 * thread is available from pertree_last_error until its next call. */
#ifndef PERTREE_PERTREE_H
#define PERTREE_PERTREE_H

#include <stddef.h>

#if defined(PERTREE_BUILDING_LIBRARY)
#define PERTREE_API __attribute__((visibility("default")))
#else
#define PERTREE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pertree_status {
  PERTREE_OK = 0,
  PERTREE_ERR_USAGE = 1,
  PERTREE_ERR_CONFIG = 2,
  PERTREE_ERR_UNSUPPORTED = 3,
  PERTREE_ERR_PARSE = 4,
  PERTREE_ERR_MISSING_COLUMN = 5,
  PERTREE_ERR_DOMAIN = 6,
  PERTREE_ERR_BOUNDS = 7,
  PERTREE_ERR_UNDEFINED_IMPURITY = 8,
  PERTREE_ERR_UNDEFINED_ESTIMATE = 9,
  PERTREE_ERR_MISSING_PROPENSITY = 10,
  PERTREE_ERR_INFEASIBLE = 11,
  PERTREE_ERR_EMPTY_MENU = 12,
  PERTREE_ERR_IO = 13,
  PERTREE_ERR_TIMEOUT = 14,
  PERTREE_ERR_NULL_ARGUMENT = 98,
  PERTREE_ERR_INTERNAL = 99
} pertree_status;

typedef struct pertree_dataset pertree_dataset;
typedef struct pertree_model pertree_model;

PERTREE_API const char* pertree_version(void);
PERTREE_API const char* pertree_last_error(void);
PERTREE_API const char* pertree_status_name(pertree_status status);
PERTREE_API void pertree_string_free(char* s);

/* Dataset. options_json (may be NULL):
 * {"treatment_col","outcome_col","counterfactuals","propensity_col",
 *  "categorical":[...],"ignore":[...],"auto_detect"} */
PERTREE_API pertree_status pertree_dataset_load_csv(const char* path, const char* options_json,
                                                    pertree_dataset** out);
/* spec_json: synthetic spec, or {"benchmark": name, "n": .., "seed": ..}. */
PERTREE_API pertree_status pertree_dataset_generate(const char* spec_json, pertree_dataset** out);
PERTREE_API pertree_status pertree_dataset_save_csv(const pertree_dataset* ds, const char* path);
PERTREE_API pertree_status pertree_dataset_shape(const pertree_dataset* ds, size_t* n, size_t* d,
                                                 int* m);
PERTREE_API void pertree_dataset_free(pertree_dataset* ds);

/* Models. algo is one of pt, pf, opt, rc-ols, rc-knn, 1va, 1v1-a, 1v1-b. */
PERTREE_API pertree_status pertree_model_train(const pertree_dataset* ds, const char* algo,
                                               const char* params_json, pertree_model** out);
PERTREE_API pertree_status pertree_model_from_json(const char* json, pertree_model** out);
PERTREE_API pertree_status pertree_model_load(const char* path, pertree_model** out);
PERTREE_API pertree_status pertree_model_to_json(const pertree_model* model, char** out);
PERTREE_API pertree_status pertree_model_save(const pertree_model* model, const char* path);
PERTREE_API pertree_status pertree_model_treatments(const pertree_model* model, int* m);
/* Writes one 1-based treatment per dataset row; capacity must be >= n. */
PERTREE_API pertree_status pertree_model_predict(const pertree_model* model,
                                                 const pertree_dataset* ds, int* out,
                                                 size_t capacity);
PERTREE_API pertree_status pertree_model_prescribe(const pertree_model* model, const double* x,
                                                   size_t d, int* out);
PERTREE_API void pertree_model_free(pertree_model* model);

/* protocol_json: {"kind":"oracle"|"ipw"} or {"kind":"greedy","n_test","seed"}
 * or {"kind":"optimal","n_pair"}. Result: {"protocol","n_test","risk","p1","p2"}. */
PERTREE_API pertree_status pertree_evaluate(const pertree_model* model, const pertree_dataset* ds,
                                            const char* protocol_json, char** metrics_json);
/* Writes the matched test set as CSV (subject_index, factual_t, factual_y,
 * yhat_1..yhat_m); removed_json receives {"removed":[...]} when non-NULL. */
PERTREE_API pertree_status pertree_submatch(const pertree_dataset* ds, const char* protocol_json,
                                            const char* csv_path, char** removed_json);

/* MIP for the fixed-depth tree problem. opt_json: {"depth","n_min_leaf",
 * "n_features","n_cuts","seed"}. solution_path (may be NULL) receives the
 * variable values induced by the exact solver's optimum. summary_json
 * receives counts and the exact objective when solved. */
PERTREE_API pertree_status pertree_export_mip(const pertree_dataset* ds, const char* opt_json,
                                              const char* mps_path, const char* map_path,
                                              const char* solution_path, char** summary_json);
/* Checks a {name: value} solution file against the model rebuilt from the
 * same data and parameters. */
PERTREE_API pertree_status pertree_check_solution(const pertree_dataset* ds, const char* opt_json,
                                                  const char* solution_path, double tolerance,
                                                  char** report_json);

/* Runs a learning-curve experiment and writes the long-format CSV. */
PERTREE_API pertree_status pertree_run_experiment(const char* config_json, const char* csv_path);

#ifdef __cplusplus
}
#endif

#endif /* PERTREE_PERTREE_H */
