/* SPDX-License-Identifier: MIT OR Apache-2.0 */

#ifndef LAVE_H
#define LAVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LaveStatus {
  LAVE_STATUS_OK = 0,
  LAVE_STATUS_NULL_POINTER = 1,
  LAVE_STATUS_DOMAIN = 2,
  LAVE_STATUS_SIZE = 3,
  LAVE_STATUS_DEGENERATE_WINDOW = 4,
  LAVE_STATUS_INSUFFICIENT_DATA = 5,
  LAVE_STATUS_DIVERGENCE = 6,
  LAVE_STATUS_UNSUPPORTED = 7,
  LAVE_STATUS_BRACKET = 8,
  LAVE_STATUS_CONVERGENCE = 9,
  LAVE_STATUS_NUMERIC = 10,
  LAVE_STATUS_PANIC = 11,
} LaveStatus;

/**
 * Opaque estimator configuration.
 */
typedef struct LaveEstimator LaveEstimator;

typedef struct LavePowerConstants {
  double c_gamma;
  double d_gamma;
  double s_gamma;
  /**
   * NaN when not defined (gamma > 1).
   */
  double a_gamma;
} LavePowerConstants;

typedef struct LaveSelection {
  size_t chosen_len;
  double theta_hat;
  double sigma_hat;
  double v_tilde;
  /**
   * Length of the first rejected candidate, 0 if none was rejected.
   */
  size_t rejected_at;
} LaveSelection;

typedef struct LaveGarchParams {
  double omega;
  double alpha;
  double beta;
} LaveGarchParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL terminated,
 * truncated to `len`) and returns the full message length plus one.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t lave_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lave_version(void);

/**
 * Gaussian constants of the power transformation.
 *
 * # Safety
 * `out` must point to writable memory.
 */
enum LaveStatus lave_power_constants(double gamma, struct LavePowerConstants *out_constants);

/**
 * Creates an estimator. `t0 = 0` selects the default `2 m0`.
 *
 * # Safety
 * `out_estimator` must point to writable memory.
 */
enum LaveStatus lave_estimator_new(double gamma,
                                   size_t m0,
                                   double lambda,
                                   size_t t0,
                                   struct LaveEstimator **out_estimator);

/**
 * Releases an estimator. Null is ignored.
 *
 * # Safety
 * `estimator` must come from [`lave_estimator_new`] and not be used again.
 */
void lave_estimator_free(struct LaveEstimator *estimator);

/**
 * Interval selection at time `tau` using `returns[0..tau]`.
 *
 * # Safety
 * `returns` must hold `len` values; `estimator` and `out_selection` must be valid.
 */
enum LaveStatus lave_estimator_select(const struct LaveEstimator *estimator,
                                      const double *returns,
                                      size_t len,
                                      size_t tau,
                                      struct LaveSelection *out_selection);

/**
 * Estimates the whole path. `sigma_out[t - 1]` and `len_out[t - 1]` receive
 * the estimate at `t`; entries before `t0` are NaN and 0.
 *
 * # Safety
 * `returns`, `sigma_out` and `len_out` must each hold `len` elements.
 */
enum LaveStatus lave_estimator_path(const struct LaveEstimator *estimator,
                                    const double *returns,
                                    size_t len,
                                    double *sigma_out,
                                    size_t *len_out);

/**
 * Monte Carlo calibration of lambda for a homogeneous interval of length `horizon`.
 *
 * # Safety
 * `out_lambda` and `out_rate` must point to writable memory.
 */
enum LaveStatus lave_calibrate_lambda(double gamma,
                                      size_t horizon,
                                      size_t m0,
                                      double alpha,
                                      size_t replications,
                                      uint64_t seed,
                                      double *out_lambda,
                                      double *out_rate);

/**
 * Gaussian quasi maximum likelihood GARCH(1,1) fit. On a convergence
 * failure the best parameters found are still written.
 *
 * # Safety
 * `returns` must hold `len` values; `out_params` must be writable.
 */
enum LaveStatus lave_garch_fit(const double *returns,
                               size_t len,
                               struct LaveGarchParams *out_params);

/**
 * Mean of `|returns[t]^2 - sigma_sq[i]|^p` where `t = origins[i]` is the
 * 1-based forecast origin.
 *
 * # Safety
 * `returns` must hold `len` values; `origins` and `sigma_sq` must hold `count`.
 */
enum LaveStatus lave_forecast_criterion(const double *returns,
                                        size_t len,
                                        const size_t *origins,
                                        const double *sigma_sq,
                                        size_t count,
                                        double p,
                                        double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LAVE_H */
