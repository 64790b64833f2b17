/*
 * truckflow C API.
 *
 * Every function returns a tflow_status. On failure a message describing
 * the error is available from tflow_last_error() until the next call on the
 * same thread. Objects are opaque handles released with the matching
 * *_free function; passing NULL to a *_free function is a no-op.
 */
#ifndef TRUCKFLOW_H_
#define TRUCKFLOW_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(TRUCKFLOW_BUILDING_LIBRARY)
#    define TFLOW_API __declspec(dllexport)
#  else
#    define TFLOW_API __declspec(dllimport)
#  endif
#else
#  define TFLOW_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tflow_status {
  TFLOW_OK = 0,
  TFLOW_E_IO = 1,
  TFLOW_E_PARSE = 2,
  TFLOW_E_SCHEMA = 3,
  TFLOW_E_DUPLICATE = 4,
  TFLOW_E_DOMAIN = 5,
  TFLOW_E_INVALID_ARGUMENT = 6,
  TFLOW_E_MODEL = 7,
  TFLOW_E_GUARD = 8,
  TFLOW_E_CALIBRATION = 9,
  TFLOW_E_INTERNAL = 10
} tflow_status;

TFLOW_API const char* tflow_last_error(void);
TFLOW_API const char* tflow_status_name(tflow_status status);
TFLOW_API const char* tflow_version(void);

typedef struct tflow_dataset tflow_dataset;
typedef struct tflow_model tflow_model;

/* ---- synthetic data ---------------------------------------------------- */

typedef struct tflow_gravity_params {
  double k;
  double alpha;
  double beta;
  double gamma;
  double sigma;
  uint64_t seed;
  int calibrate;        /* nonzero: rescale k so the median flow is ~278 */
} tflow_gravity_params;

TFLOW_API void tflow_gravity_params_default(tflow_gravity_params* params);

/* Writes zones.csv-format and od_flows.csv-format files. `k_used` may be
 * NULL. */
TFLOW_API tflow_status tflow_synth(size_t zones, const tflow_gravity_params* params,
                                   const char* zones_path, const char* flows_path,
                                   double* k_used);

/* ---- ingest and datasets ---------------------------------------------- */

typedef struct tflow_ingest_options {
  const char* flows_path;       /* required */
  const char* zones_path;       /* required (centroids, and attributes unless counties) */
  const char* counties_path;    /* optional */
  const char* crosswalk_path;   /* optional, with counties */
  const char* exclusions_path;  /* optional */
  int exclude_intrazonal;
} tflow_ingest_options;

typedef struct tflow_ingest_report {
  size_t loaded;
  size_t removed_excluded;
  size_t removed_zero;
  size_t removed_intrazonal;
  size_t retained;
  size_t zones;
  size_t counties_skipped;
  size_t zones_without_counties;
} tflow_ingest_report;

TFLOW_API tflow_status tflow_ingest(const tflow_ingest_options* options,
                                    tflow_dataset** out, tflow_ingest_report* report);

TFLOW_API tflow_status tflow_dataset_read(const char* path, tflow_dataset** out);
TFLOW_API tflow_status tflow_dataset_write(const tflow_dataset* data, const char* path);
TFLOW_API void tflow_dataset_free(tflow_dataset* data);
TFLOW_API size_t tflow_dataset_rows(const tflow_dataset* data);
TFLOW_API size_t tflow_dataset_cols(const tflow_dataset* data);
/* Name of column `col`, or NULL when out of range. Owned by the dataset. */
TFLOW_API const char* tflow_dataset_feature_name(const tflow_dataset* data, size_t col);
/* Copies row `row` into `features` (length `n` == cols) and its target. */
TFLOW_API tflow_status tflow_dataset_row(const tflow_dataset* data, size_t row,
                                         double* features, size_t n, double* target);

typedef enum tflow_partition {
  TFLOW_PARTITION_ALL = 0,
  TFLOW_PARTITION_TRAIN = 1,
  TFLOW_PARTITION_TEST = 2
} tflow_partition;

/* Seeded train/test split; returns the requested part as a new dataset. */
TFLOW_API tflow_status tflow_dataset_partition(const tflow_dataset* data,
                                               double train_fraction, uint64_t seed,
                                               tflow_partition part,
                                               tflow_dataset** out);
/* Seeded sample of at most `count` rows (all rows when count >= rows). */
TFLOW_API tflow_status tflow_dataset_sample(const tflow_dataset* data, size_t count,
                                            uint64_t seed, tflow_dataset** out);

/* Descriptive statistics CSV (variable,mean,median,min,max). A NULL path
 * writes to standard output. */
TFLOW_API tflow_status tflow_stats_dataset(const tflow_dataset* data,
                                           const char* out_path);
TFLOW_API tflow_status tflow_stats_raw(const tflow_ingest_options* options,
                                       const char* out_path);

/* ---- boosting ---------------------------------------------------------- */

typedef struct tflow_params {
  int max_depth;
  double min_child_weight;
  double eta;
  double subsample;
  double colsample_bytree;
  int rounds;
  double lambda;
  double gamma;
  uint64_t seed;
  int early_stopping_rounds;  /* 0 disables; needs a validation set */
} tflow_params;

TFLOW_API void tflow_params_default(tflow_params* params);

/* `validation` may be NULL. */
TFLOW_API tflow_status tflow_train(const tflow_dataset* train,
                                   const tflow_dataset* validation,
                                   const tflow_params* params, tflow_model** out);
TFLOW_API tflow_status tflow_model_read(const char* path, tflow_model** out);
TFLOW_API tflow_status tflow_model_write(const tflow_model* model, const char* path);
TFLOW_API void tflow_model_free(tflow_model* model);
TFLOW_API size_t tflow_model_num_trees(const tflow_model* model);
TFLOW_API size_t tflow_model_num_features(const tflow_model* model);
TFLOW_API tflow_status tflow_model_params(const tflow_model* model, tflow_params* out);
TFLOW_API tflow_status tflow_predict(const tflow_model* model, const double* row,
                                     size_t n, double* out);

/* ---- evaluation -------------------------------------------------------- */

typedef struct tflow_metrics {
  double rmsle;
  double r_squared;
  size_t n;
} tflow_metrics;

TFLOW_API tflow_status tflow_evaluate(const tflow_model* model,
                                      const tflow_dataset* data, int rmsle_plus_one,
                                      tflow_metrics* out);
TFLOW_API tflow_status tflow_metrics_write(const tflow_metrics* metrics,
                                           const char* path);

typedef struct tflow_cv_summary {
  double mean_rmsle;
  double std_rmsle;
  double mean_r_squared;
  double std_r_squared;
} tflow_cv_summary;

/* k-fold CV; writes one CSV row per fold (plus mean/std rows) when
 * `out_path` is non-NULL. `summary` may be NULL. */
TFLOW_API tflow_status tflow_cv(const tflow_dataset* data, const tflow_params* params,
                                size_t k, uint64_t seed, int rmsle_plus_one,
                                const char* out_path, tflow_cv_summary* summary);

/* Grid search over a grid file (`name,v1,v2,...` per line) starting from
 * `base`; writes the full table and returns the minimizer in `best`. */
TFLOW_API tflow_status tflow_tune(const tflow_dataset* data, const char* grid_path,
                                  const tflow_params* base, size_t k, uint64_t seed,
                                  int rmsle_plus_one, const char* out_path,
                                  tflow_params* best);

/* ---- explanations ------------------------------------------------------ */

/* phi has length n (== model features). */
TFLOW_API tflow_status tflow_explain(const tflow_model* model, const double* row,
                                     size_t n, double* base_value, double* phi);
/* Brute-force reference; limited to 20 features. */
TFLOW_API tflow_status tflow_explain_exact(const tflow_model* model, const double* row,
                                           size_t n, double* base_value, double* phi);
/* Row-major n x n interaction matrix. */
TFLOW_API tflow_status tflow_explain_interactions(const tflow_model* model,
                                                  const double* row, size_t n,
                                                  double* matrix);

/* Writes shap_values.csv for every dataset row and one interaction CSV per
 * "A,B" entry of `pairs` (next to `shap_path`). */
TFLOW_API tflow_status tflow_explain_write(const tflow_model* model,
                                           const tflow_dataset* data,
                                           const char* shap_path,
                                           const char* const* pairs, size_t n_pairs);

/* Feature value where the smoothed (value, phi) curve changes sign. Returns
 * TFLOW_OK with *found = 0 when there is none. */
TFLOW_API tflow_status tflow_zero_crossing(const double* values, const double* phi,
                                           size_t n, size_t window, int* found,
                                           double* threshold);

/* ---- plots ------------------------------------------------------------- */

typedef enum tflow_plot_kind {
  TFLOW_PLOT_IMPORTANCE = 0,
  TFLOW_PLOT_BEESWARM = 1,
  TFLOW_PLOT_DEPENDENCE = 2,
  TFLOW_PLOT_INTERACTION = 3
} tflow_plot_kind;

typedef struct tflow_plot_options {
  tflow_plot_kind kind;
  const char* input_path;  /* shap_values.csv, or an interaction CSV */
  const char* data_path;   /* dataset CSV; needed except for interaction */
  const char* feature;     /* dependence plot feature */
  int sign_vs_target;      /* importance colors from corr(feature, target) */
  size_t window;           /* smoothing window; 0 selects the default */
  const char* out_path;
} tflow_plot_options;

TFLOW_API tflow_status tflow_plot(const tflow_plot_options* options);

#ifdef __cplusplus
}  // extern "C"
#endif

#endif  // TRUCKFLOW_H_
