#ifndef PMFIX_H
#define PMFIX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every exported function.
 */
typedef enum PmfixStatus {
  PMFIX_STATUS_OK = 0,
  /**
   * A hypothesis, condition or contraction check failed, or an iteration
   * stopped without converging.
   */
  PMFIX_STATUS_VIOLATION = 1,
  PMFIX_STATUS_NULL_POINTER = 2,
  PMFIX_STATUS_INVALID_ARGUMENT = 3,
  PMFIX_STATUS_DOMAIN = 4,
  PMFIX_STATUS_DIMENSION = 5,
  PMFIX_STATUS_EMPTY_SET = 6,
  PMFIX_STATUS_PARSE = 7,
  PMFIX_STATUS_IO = 8,
  PMFIX_STATUS_PANIC = 9,
} PmfixStatus;

/**
 * Opaque handle to a bundled partial metric.
 */
typedef struct PmfixMetric PmfixMetric;

/**
 * Opaque handle to a finite point set.
 */
typedef struct PmfixPointSet PmfixPointSet;

/**
 * Result of [`pmfix_example_iterate`].
 */
typedef struct PmfixIterateResult {
  /**
   * Limit point; NaN when the run did not converge.
   */
  double limit;
  /**
   * Number of recorded steps.
   */
  size_t steps;
  /**
   * Self-distance `p(limit, limit)`; NaN when the run did not converge.
   */
  double self_distance;
} PmfixIterateResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on the calling thread, or null when
 * the last call succeeded. The pointer stays valid until the next call into
 * the library on this thread and must not be freed.
 */
const char *pmfix_last_error(void);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a pointer obtained from this library that has not
 * been freed yet.
 */
void pmfix_string_free(char *s);

/**
 * Creates a bundled metric by name (`max_metric`, `euclidean`,
 * `mixed_metric`, ...). `param` points to the metric parameter (the constant `k`
 * of `mixed_metric`) or is null when the metric takes none.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `param` must be null or valid for
 * one read; `out` must be valid for one write.
 */
enum PmfixStatus pmfix_metric_new(const char *name, const double *param, struct PmfixMetric **out);

/**
 * Releases a metric handle. Null is ignored.
 *
 * # Safety
 * `m` must be null or a live handle from [`pmfix_metric_new`].
 */
void pmfix_metric_free(struct PmfixMetric *m);

/**
 * Evaluates the partial metric `p(x, y)` for two points of dimension `dim`.
 *
 * # Safety
 * `m` must be a live handle; `x` and `y` must be valid for `dim` reads;
 * `out` must be valid for one write.
 */
enum PmfixStatus pmfix_metric_distance(const struct PmfixMetric *m,
                                       const double *x,
                                       const double *y,
                                       size_t dim,
                                       double *out);

/**
 * Evaluates the induced metric `2p(x, y) - p(x, x) - p(y, y)`.
 *
 * # Safety
 * Same contract as [`pmfix_metric_distance`].
 */
enum PmfixStatus pmfix_metric_induced(const struct PmfixMetric *m,
                                      const double *x,
                                      const double *y,
                                      size_t dim,
                                      double *out);

/**
 * Builds a point set from `n_points * dim` row-major coordinates.
 * Exact duplicates are kept once.
 *
 * # Safety
 * `coords` must be valid for `n_points * dim` reads; `out` must be valid for
 * one write.
 */
enum PmfixStatus pmfix_point_set_new(const double *coords,
                                     size_t n_points,
                                     size_t dim,
                                     struct PmfixPointSet **out);

/**
 * Releases a point-set handle. Null is ignored.
 *
 * # Safety
 * `s` must be null or a live handle from [`pmfix_point_set_new`].
 */
void pmfix_point_set_free(struct PmfixPointSet *s);

/**
 * Number of distinct points in the set, or 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live handle.
 */
size_t pmfix_point_set_len(const struct PmfixPointSet *s);

/**
 * Partial Hausdorff distance `H_p(a, b)` under the metric `m`.
 *
 * # Safety
 * `m`, `a` and `b` must be live handles; `out` must be valid for one write.
 */
enum PmfixStatus pmfix_hausdorff(const struct PmfixMetric *m,
                                 const struct PmfixPointSet *a,
                                 const struct PmfixPointSet *b,
                                 double *out);

/**
 * Runs the alternating iteration of the bundled four-map worked example on
 * `[0, k]` with the mixed metric of constant `k`, starting at `x0`.
 * Returns [`PmfixStatus::Violation`] when the run stops without converging;
 * `out` is filled either way.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum PmfixStatus pmfix_example_iterate(double k,
                                       double x0,
                                       double tol,
                                       size_t max_iters,
                                       struct PmfixIterateResult *out);

/**
 * Runs a scenario given as JSON text, writing artifacts under `out_dir`.
 * `seed` is null to keep the scenario's own seed. On success `summary`
 * receives a one-line description to release with [`pmfix_string_free`].
 * Returns [`PmfixStatus::Violation`] when a check in the scenario failed;
 * the summary is still written in that case.
 *
 * # Safety
 * `json` and `out_dir` must be NUL-terminated strings; `seed` must be null
 * or valid for one read; `summary` must be null or valid for one write.
 */
enum PmfixStatus pmfix_run_scenario_json(const char *json,
                                         const char *out_dir,
                                         const uint64_t *seed,
                                         char **summary);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PMFIX_H */
