/* SPDX-License-Identifier: Apache-2.0 */

#ifndef OCTRACK_H
#define OCTRACK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OctrackStatus {
  OCTRACK_STATUS_OK = 0,
  OCTRACK_STATUS_NULL_POINTER = 1,
  OCTRACK_STATUS_INVALID_PARAM = 2,
  OCTRACK_STATUS_NON_FINITE = 3,
  OCTRACK_STATUS_NO_CONVERGENCE = 4,
  OCTRACK_STATUS_PANIC = 5,
} OctrackStatus;

typedef enum OctrackLayer {
  OCTRACK_LAYER_EPITHELIUM = 0,
  OCTRACK_LAYER_DM = 1,
} OctrackLayer;

typedef enum OctrackPipeline {
  OCTRACK_PIPELINE_RAW = 0,
  OCTRACK_PIPELINE_KDH = 1,
} OctrackPipeline;

/**
 * Opaque tracker handle.
 */
typedef struct OctrackTracker OctrackTracker;

/**
 * Filter and window settings. Fill with [`octrack_params_default`] and
 * override fields as needed.
 */
typedef struct OctrackParams {
  double f;
  double h;
  double q;
  double r;
  double p0;
  uint32_t window_len;
  uint32_t warmup_len;
  double recent_weight;
  double prior_weight;
} OctrackParams;

/**
 * Output of one step. `has_estimate` is 0 until the first valid depth.
 */
typedef struct OctrackStep {
  uint8_t has_estimate;
  double estimate;
  double gain;
} OctrackStep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Writes the default parameters (q = 1e-5, r = 1, 50-point windows,
 * 0.7 / 0.3 weights) to `out`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `OctrackParams`.
 */
enum OctrackStatus octrack_params_default(struct OctrackParams *out);

/**
 * Creates a tracker. `params` may be null for defaults. On success `*out`
 * owns a handle that must be released with `octrack_tracker_free`.
 *
 * # Safety
 * `params` must be null or valid for reads; `out` must be valid for writes.
 */
enum OctrackStatus octrack_tracker_new(enum OctrackLayer layer,
                                       enum OctrackPipeline pipeline,
                                       const struct OctrackParams *params,
                                       struct OctrackTracker **out);

/**
 * Feeds the next column. `valid == 0` marks a dropout and `depth_px` is
 * ignored.
 *
 * # Safety
 * `tracker` must come from `octrack_tracker_new` and not be freed; `out`
 * must be valid for writes.
 */
enum OctrackStatus octrack_tracker_step(struct OctrackTracker *tracker,
                                        double depth_px,
                                        uint8_t valid,
                                        struct OctrackStep *out);

/**
 * Number of columns fed so far.
 *
 * # Safety
 * `tracker` must be null or a live handle.
 */
size_t octrack_tracker_columns(const struct OctrackTracker *tracker);

/**
 * Releases a tracker. Null is ignored.
 *
 * # Safety
 * `tracker` must be null or a handle not yet freed.
 */
void octrack_tracker_free(struct OctrackTracker *tracker);

/**
 * Fixed point of the prior covariance and its gain.
 *
 * # Safety
 * `params` must be null (defaults) or readable; outputs must be writable.
 */
enum OctrackStatus octrack_steady_state(const struct OctrackParams *params,
                                        double tol,
                                        size_t max_iter,
                                        double *p_prior_out,
                                        double *gain_out);

/**
 * `100 * (baseline - method) / baseline`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum OctrackStatus octrack_reduction_pct(double baseline_mae, double method_mae, double *out);

/**
 * Static, NUL-terminated description of a status code.
 */
const char *octrack_status_message(enum OctrackStatus status);

const char *octrack_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OCTRACK_H */
