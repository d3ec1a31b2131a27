#ifndef PCREDML_H
#define PCREDML_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum PcdStatus {
  PCD_STATUS_OK = 0,
  PCD_STATUS_NULL_POINTER = 1,
  PCD_STATUS_INVALID_ARGUMENT = 2,
  PCD_STATUS_IO = 3,
  PCD_STATUS_SCHEMA = 4,
  PCD_STATUS_DATA = 5,
  PCD_STATUS_FIT = 6,
  PCD_STATUS_DEGENERATE = 7,
  PCD_STATUS_PANIC = 8,
} PcdStatus;

/**
 * Estimator selector.
 */
typedef enum PcdEstimator {
  PCD_ESTIMATOR_OLS = 0,
  PCD_ESTIMATOR_FIXED_EFFECTS = 1,
  PCD_ESTIMATOR_SYSTEM_GMM = 2,
  PCD_ESTIMATOR_CRE_DML = 3,
  PCD_ESTIMATOR_P_CRE_DML = 4,
} PcdEstimator;

/**
 * Opaque panel dataset.
 */
typedef struct PcdPanel PcdPanel;

/**
 * Opaque Monte Carlo report.
 */
typedef struct PcdReport PcdReport;

/**
 * Point estimate with inference. `se` and `p_value` are NaN when the
 * estimator produced none.
 */
typedef struct PcdEstimate {
  double coef;
  double se;
  double p_value;
  size_t n_obs;
} PcdEstimate;

/**
 * Bias, variance and MSE of one estimator across replications.
 */
typedef struct PcdSummary {
  double bias;
  double variance;
  double mse;
  size_t n_draws;
  size_t n_failures;
} PcdSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *pcd_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pcd_version(void);

/**
 * Loads a panel CSV with the default column names, builds the lag and
 * entity-mean columns the estimators need and stores a new handle in `out`.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum PcdStatus pcd_panel_load_csv(const char *path, struct PcdPanel **out);

/**
 * Simulates replication `replication` of the default data-generating
 * process under `seed`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PcdStatus pcd_panel_simulate(uint64_t seed, size_t replication, struct PcdPanel **out);

/**
 * Releases a panel handle; null is ignored.
 *
 * # Safety
 * `panel` must come from this library and not be used afterwards.
 */
void pcd_panel_free(struct PcdPanel *panel);

/**
 * Number of rows, or 0 for a null handle.
 *
 * # Safety
 * `panel` must be null or a live handle.
 */
size_t pcd_panel_nrows(const struct PcdPanel *panel);

/**
 * Number of entities, or 0 for a null handle.
 *
 * # Safety
 * `panel` must be null or a live handle.
 */
size_t pcd_panel_nentities(const struct PcdPanel *panel);

/**
 * Fits one estimator with default settings seeded by `seed`.
 *
 * # Safety
 * `panel` must be a live handle and `out` a valid pointer.
 */
enum PcdStatus pcd_estimate(const struct PcdPanel *panel,
                            enum PcdEstimator estimator,
                            uint64_t seed,
                            struct PcdEstimate *out);

/**
 * Runs `n_sims` replications of the default data-generating process with
 * every estimator.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PcdStatus pcd_monte_carlo(uint64_t seed, size_t n_sims, struct PcdReport **out);

/**
 * Summary of one estimator. Fails with [`PcdStatus::Fit`] when every
 * replication of that estimator failed.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum PcdStatus pcd_report_summary(const struct PcdReport *report,
                                  enum PcdEstimator estimator,
                                  struct PcdSummary *out);

/**
 * Releases a report handle; null is ignored.
 *
 * # Safety
 * `report` must come from this library and not be used afterwards.
 */
void pcd_report_free(struct PcdReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PCREDML_H */
