#ifndef CONE_H
#define CONE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum ConeStatus {
  CONE_STATUS_OK = 0,
  CONE_STATUS_NULL_POINTER = 1,
  CONE_STATUS_DOMAIN = 2,
  CONE_STATUS_VALUE = 3,
  CONE_STATUS_ARGUMENT = 4,
  CONE_STATUS_NO_DATA = 5,
  CONE_STATUS_STD_UNAVAILABLE = 6,
  CONE_STATUS_UNINITIALIZED = 7,
  CONE_STATUS_NUMERIC = 8,
  CONE_STATUS_CONFIG = 9,
  CONE_STATUS_IO = 10,
  CONE_STATUS_PARSE = 11,
  CONE_STATUS_UTF8 = 12,
  CONE_STATUS_PANIC = 13,
} ConeStatus;

/**
 * Observation history for one problem, with its estimator settings and a
 * private random stream for tie-breaking and sampling.
 */
typedef struct ConeDataset ConeDataset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null if none.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *cone_last_error(void);

/**
 * Create an empty dataset over the box `[lower, upper]` of dimension `dim`.
 * `xi` is the neighborhood exponent (0.5 is the usual choice); the radius
 * constant takes its default for the box. `seed` drives tie-breaking and
 * sampling on this handle.
 *
 * # Safety
 * `lower` and `upper` must point to `dim` doubles; `out` must be writable.
 */
enum ConeStatus cone_dataset_new(const double *lower,
                                 const double *upper,
                                 size_t dim,
                                 size_t n_decisions,
                                 double xi,
                                 uint64_t seed,
                                 struct ConeDataset **out);

/**
 * Load a dataset saved by [`cone_dataset_save`] or by `cone run --save-datasets`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `lower`/`upper` must point to `dim`
 * doubles; `out` must be writable.
 */
enum ConeStatus cone_dataset_load(const char *path,
                                  const double *lower,
                                  const double *upper,
                                  size_t dim,
                                  size_t n_decisions,
                                  double xi,
                                  uint64_t seed,
                                  struct ConeDataset **out);

/**
 * Write the dataset as CSV (`stage,decision,y_1..y_d,value`).
 *
 * # Safety
 * `ds` must be a live handle and `path` a NUL-terminated string.
 */
enum ConeStatus cone_dataset_save(const struct ConeDataset *ds, const char *path);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `ds` must be null or a handle not yet freed.
 */
void cone_dataset_free(struct ConeDataset *ds);

/**
 * Number of observations; 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle.
 */
size_t cone_dataset_len(const struct ConeDataset *ds);

/**
 * Dimension of the context box; 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle.
 */
size_t cone_dataset_dim(const struct ConeDataset *ds);

/**
 * Append an observation; its 1-based stage is written to `stage` if non-null.
 *
 * # Safety
 * `ds` must be a live handle; `coords` must point to `dim` doubles.
 */
enum ConeStatus cone_dataset_append(struct ConeDataset *ds,
                                    size_t decision,
                                    const double *coords,
                                    size_t dim,
                                    double value,
                                    size_t *stage);

/**
 * Neighborhood estimate of `decision` at a query context.
 *
 * Writes the neighborhood size to `psi`, its mean to `mean` and its sample
 * standard deviation, floored at 1e-6, to `std`. With fewer than two
 * members the call fails (`NO_DATA` or `STD_UNAVAILABLE`) after writing
 * whatever is defined (`psi`, and `mean` when `psi == 1`).
 *
 * # Safety
 * `ds` must be a live handle; `coords` must point to `dim` doubles; each
 * output pointer may be null.
 */
enum ConeStatus cone_sne_estimate(const struct ConeDataset *ds,
                                  size_t decision,
                                  const double *coords,
                                  size_t dim,
                                  double *mean,
                                  double *std,
                                  size_t *psi);

/**
 * Decision with the smallest estimated mean at a query (ties broken at random).
 *
 * # Safety
 * `ds` must be a live handle; `coords` must point to `dim` doubles;
 * `decision` must be writable.
 */
enum ConeStatus cone_predict_best(struct ConeDataset *ds,
                                  const double *coords,
                                  size_t dim,
                                  size_t *decision);

/**
 * Next CONE sampling pair. `lambda_lo <= lambda_hi` truncate the sampling
 * field (0.01 and 100 are the usual choices). Every decision needs at least
 * two observations first. The context is written to `ctx_out` (`dim` doubles).
 *
 * # Safety
 * `ds` must be a live handle; `decision` must be writable; `ctx_out` must
 * point to `dim` writable doubles.
 */
enum ConeStatus cone_next(struct ConeDataset *ds,
                          double lambda_lo,
                          double lambda_hi,
                          size_t *decision,
                          double *ctx_out,
                          size_t dim);

/**
 * Default radius constant for a box of dimension `dim` and exponent `xi`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ConeStatus cone_default_c(size_t dim, double xi, double *out);

/**
 * Lower real branch of the Lambert W function, for `z` in `[-1/e, 0)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ConeStatus cone_lambert_w_minus1(double z, double *out);

/**
 * `-W_{-1}(-exp(-zeta - 1))` for `zeta > 0`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ConeStatus cone_neg_w_factor(double zeta, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONE_H */
