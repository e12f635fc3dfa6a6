#ifndef CBEM_H
#define CBEM_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CbemStatus {
  CBEM_STATUS_OK = 0,
  CBEM_STATUS_NULL_POINTER = 1,
  CBEM_STATUS_INVALID_ARGUMENT = 2,
  CBEM_STATUS_OUT_OF_SUPPORT = 3,
  /**
   * The fit hit a zero-probability observation or a non-finite likelihood.
   */
  CBEM_STATUS_DEGENERATE = 4,
  CBEM_STATUS_BUFFER_TOO_SMALL = 5,
  CBEM_STATUS_PANIC = 6,
} CbemStatus;

/**
 * Opaque dataset handle.
 */
typedef struct CbemDataset CbemDataset;

/**
 * Opaque fit handle.
 */
typedef struct CbemFit CbemFit;

/**
 * EM controls. [`cbem_em_config_default`] gives start (0.5, 0.5),
 * 1000 iterations and tolerance 1e-15.
 */
typedef struct CbemEmConfig {
  double start_p;
  double start_rho;
  size_t max_iterations;
  double epsilon;
} CbemEmConfig;

typedef struct CbemFitSummary {
  double p_hat;
  double rho_hat;
  size_t iterations;
  bool converged_p;
  bool converged_rho;
  double log_likelihood;
} CbemFitSummary;

typedef struct CbemGridPoint {
  double p;
  double rho;
  double log_likelihood;
} CbemGridPoint;

typedef struct CbemParameterSummary {
  double bias;
  double rmse;
  double interval_low;
  double interval_high;
} CbemParameterSummary;

typedef struct CbemStudySummary {
  struct CbemParameterSummary p;
  struct CbemParameterSummary rho;
  size_t degenerate_count;
  size_t failed_count;
} CbemStudySummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cbem_version(void);

/**
 * Static description of a status code.
 */
const char *cbem_status_message(enum CbemStatus status);

/**
 * Message for the last failure on this thread, or NULL if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *cbem_last_error_message(void);

struct CbemEmConfig cbem_em_config_default(void);

/**
 * # Safety
 * `out` must be NULL or valid for writing one `double`.
 */
enum CbemStatus cbem_binomial_pmf(uint32_t y, uint32_t n, double p, double *out);

/**
 * # Safety
 * `out` must be NULL or valid for writing one `double`.
 */
enum CbemStatus cbem_cb_pmf(uint32_t y, uint32_t n, double p, double rho, double *out);

/**
 * Copies `len` observations into a new dataset.
 *
 * # Safety
 * `observations` must point to `len` readable `uint32_t` values (it may be
 * NULL only when `len` is 0). `out` must be valid for writing a pointer.
 */
enum CbemStatus cbem_dataset_new(uint32_t n,
                                 const uint32_t *observations,
                                 size_t len,
                                 struct CbemDataset **out);

/**
 * # Safety
 * `dataset` must be NULL or a handle from this library not yet freed.
 */
void cbem_dataset_free(struct CbemDataset *dataset);

/**
 * Number of observations, 0 for NULL.
 *
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
size_t cbem_dataset_len(const struct CbemDataset *dataset);

/**
 * Trial count, 0 for NULL.
 *
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
uint32_t cbem_dataset_n(const struct CbemDataset *dataset);

/**
 * Copies the observations into `buffer`, which must hold at least
 * `cbem_dataset_len` values.
 *
 * # Safety
 * `dataset` must be a live handle; `buffer` must be valid for `capacity` writes.
 */
enum CbemStatus cbem_dataset_copy_observations(const struct CbemDataset *dataset,
                                               uint32_t *buffer,
                                               size_t capacity);

/**
 * Observed-data log-likelihood; may be `-inf` when the data contradict
 * boundary parameters.
 *
 * # Safety
 * `dataset` must be a live handle; `out` valid for one `double`.
 */
enum CbemStatus cbem_log_likelihood(const struct CbemDataset *dataset,
                                    double p,
                                    double rho,
                                    double *out);

/**
 * Seeded draw of `k` observations from CB(n, p, rho).
 *
 * # Safety
 * `out` must be valid for writing a pointer.
 */
enum CbemStatus cbem_sample(uint32_t n,
                            double p,
                            double rho,
                            size_t k,
                            uint64_t seed,
                            struct CbemDataset **out);

/**
 * Runs EM. `config` may be NULL for the defaults.
 *
 * # Safety
 * `dataset` must be a live handle, `config` NULL or valid, `out` valid
 * for writing a pointer.
 */
enum CbemStatus cbem_em_fit(const struct CbemDataset *dataset,
                            const struct CbemEmConfig *config,
                            struct CbemFit **out);

/**
 * # Safety
 * `fit` must be NULL or a handle from [`cbem_em_fit`] not yet freed.
 */
void cbem_fit_free(struct CbemFit *fit);

/**
 * # Safety
 * `fit` must be a live handle; `out` valid for writing one summary.
 */
enum CbemStatus cbem_fit_summary(const struct CbemFit *fit, struct CbemFitSummary *out);

/**
 * Copies the final responsibilities (one per observation) into `buffer`.
 *
 * # Safety
 * `fit` must be a live handle; `buffer` valid for `capacity` writes.
 */
enum CbemStatus cbem_fit_responsibilities(const struct CbemFit *fit,
                                          double *buffer,
                                          size_t capacity);

/**
 * Brute-force grid maximizer. Pass `resolution = 0` for the default
 * search (2001 points, 3 refinement rounds, shrink 0.05).
 *
 * # Safety
 * `dataset` must be a live handle; `out` valid for writing one point.
 */
enum CbemStatus cbem_grid_mle(const struct CbemDataset *dataset,
                              size_t resolution,
                              size_t refine_rounds,
                              double refine_shrink,
                              struct CbemGridPoint *out);

/**
 * Monte-Carlo study of `replications` fits on samples of size `k`.
 * `config` may be NULL for the default EM controls.
 *
 * # Safety
 * `config` must be NULL or valid; `out` valid for writing one summary.
 */
enum CbemStatus cbem_run_scenario(uint32_t n,
                                  double p,
                                  double rho,
                                  size_t k,
                                  size_t replications,
                                  uint64_t seed,
                                  const struct CbemEmConfig *config,
                                  struct CbemStudySummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CBEM_H */
