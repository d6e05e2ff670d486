#ifndef PINNS_H
#define PINNS_H

/* Generated by cbindgen from crates/pinns-ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PinnsStatus {
  PINNS_STATUS_OK = 0,
  PINNS_STATUS_NULL_POINTER = 1,
  PINNS_STATUS_INVALID_ARGUMENT = 2,
  PINNS_STATUS_UNKNOWN_PROBLEM = 3,
  PINNS_STATUS_IO = 4,
  PINNS_STATUS_BUFFER_TOO_SMALL = 5,
  PINNS_STATUS_FAILED = 6,
  PINNS_STATUS_PANIC = 7,
} PinnsStatus;

/**
 * A network with its parameters.
 */
typedef struct PinnsModel PinnsModel;

/**
 * A builtin problem.
 */
typedef struct PinnsProblem PinnsProblem;

/**
 * Settings for [`pinns_train`]. Zero fields take the library defaults.
 */
typedef struct PinnsTrainOptions {
  /**
   * Total training points.
   */
  size_t n_points;
  size_t depth;
  size_t width;
  double lambda;
  double lambda_reg;
  size_t max_iter;
  uint64_t seed;
} PinnsTrainOptions;

/**
 * Training errors of a run.
 */
typedef struct PinnsTrainSummary {
  double e_d;
  double e_p;
  /**
   * NaN for problems without a boundary term.
   */
  double e_sb;
  double e_t;
  size_t iterations;
  /**
   * Nonzero when the optimizer stopped on a line-search failure.
   */
  int32_t flagged;
} PinnsTrainSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL, or
 * 0 when there is none.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t pinns_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pinns_version(void);

/**
 * Looks up a catalog problem such as `poisson` or `heatnd:5`.
 *
 * # Safety
 * `id` must be a NUL-terminated string; `out` must be writable.
 */
enum PinnsStatus pinns_problem_new(const char *id, struct PinnsProblem **out);

/**
 * # Safety
 * `p` must come from [`pinns_problem_new`] and not be used afterwards.
 */
void pinns_problem_free(struct PinnsProblem *p);

/**
 * Input dimension (space, then time); 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
size_t pinns_problem_input_dim(const struct PinnsProblem *p);

/**
 * Output dimension; 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
size_t pinns_problem_output_dim(const struct PinnsProblem *p);

/**
 * Exact solution at `n_points` row-major points.
 *
 * # Safety
 * `points` holds `n_points · input_dim` values; `out` holds `out_len`.
 */
enum PinnsStatus pinns_problem_exact(const struct PinnsProblem *p,
                                     const double *points,
                                     size_t n_points,
                                     double *out,
                                     size_t out_len);

/**
 * Trains one network with LBFGS.
 *
 * # Safety
 * `p` must be live; `opts` may be null; `out_model` must be writable;
 * `summary` may be null.
 */
enum PinnsStatus pinns_train(const struct PinnsProblem *p,
                             const struct PinnsTrainOptions *opts,
                             struct PinnsModel **out_model,
                             struct PinnsTrainSummary *summary);

/**
 * Loads a JSON checkpoint.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum PinnsStatus pinns_model_load(const char *path, struct PinnsModel **out);

/**
 * Writes a JSON checkpoint.
 *
 * # Safety
 * `m` must be live; `path` must be a NUL-terminated string.
 */
enum PinnsStatus pinns_model_save(const struct PinnsModel *m, const char *path);

/**
 * # Safety
 * `m` must come from this library and not be used afterwards.
 */
void pinns_model_free(struct PinnsModel *m);

/**
 * Number of parameters; 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t pinns_model_param_count(const struct PinnsModel *m);

/**
 * Network outputs at `n_points` row-major points.
 *
 * # Safety
 * `points` holds `n_points · input_dim` values; `out` holds `out_len`.
 */
enum PinnsStatus pinns_model_eval(const struct PinnsModel *m,
                                  const double *points,
                                  size_t n_points,
                                  double *out,
                                  size_t out_len);

/**
 * Relative L² error in percent on the default test set.
 *
 * # Safety
 * `m` and `p` must be live; `out` must be writable.
 */
enum PinnsStatus pinns_model_l2_error(const struct PinnsModel *m,
                                      const struct PinnsProblem *p,
                                      double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PINNS_H */
