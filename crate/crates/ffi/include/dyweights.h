#ifndef DYWEIGHTS_H
#define DYWEIGHTS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum DwStatus {
  DW_STATUS_OK = 0,
  DW_STATUS_NULL_POINTER = 1,
  DW_STATUS_INVALID_ARGUMENT = 2,
  DW_STATUS_DEPTH_OUT_OF_RANGE = 3,
  DW_STATUS_LENGTH_MISMATCH = 4,
  DW_STATUS_NOT_POSITIVE = 5,
  DW_STATUS_DENSE_TOO_LARGE = 6,
  DW_STATUS_UNKNOWN_CHECK = 7,
  DW_STATUS_NOT_LINEAR = 8,
  DW_STATUS_IO = 9,
  DW_STATUS_PANIC = 10,
} DwStatus;

typedef enum DwOperator {
  DW_OPERATOR_SQUARE = 0,
  DW_OPERATOR_PARAPRODUCT = 1,
  DW_OPERATOR_PARAPRODUCT_ADJOINT = 2,
  DW_OPERATOR_MARTINGALE = 3,
  DW_OPERATOR_T0 = 4,
  DW_OPERATOR_MAXIMAL = 5,
  DW_OPERATOR_MAXIMAL_WEIGHTED = 6,
} DwOperator;

typedef enum DwMethod {
  DW_METHOD_DENSE = 0,
  DW_METHOD_POWER = 1,
  DW_METHOD_FORM = 2,
} DwMethod;

typedef enum DwEstimateKind {
  DW_ESTIMATE_KIND_EXACT = 0,
  DW_ESTIMATE_KIND_CONVERGED_ITERATIVE = 1,
  DW_ESTIMATE_KIND_LOWER_BOUND = 2,
} DwEstimateKind;

/**
 * Opaque weight handle.
 */
typedef struct DwWeight DwWeight;

/**
 * Iteration controls; `tol <= 0` or `max_iters == 0` select the defaults.
 */
typedef struct DwPowerConfig {
  double tol;
  size_t max_iters;
  uint64_t seed;
} DwPowerConfig;

typedef struct DwNormEstimate {
  double value;
  enum DwEstimateKind kind;
  size_t iterations;
  double residual;
} DwNormEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *dw_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` is null or came from this library and was not freed before.
 */
void dw_string_free(char *s);

/**
 * Weight from `2^depth` positive leaf values.
 *
 * # Safety
 * `values` points to `len` doubles; `out` is writable.
 */
enum DwStatus dw_weight_from_values(uint32_t depth,
                                    const double *values,
                                    size_t len,
                                    struct DwWeight **out);

/**
 * Weight from a JSON weight description.
 *
 * # Safety
 * `json` is a NUL-terminated string; `out` is writable.
 */
enum DwStatus dw_weight_from_json(const char *json, struct DwWeight **out);

/**
 * Cell averages of `x^alpha`, `alpha` in `(-1, 1)`.
 *
 * # Safety
 * `out` is writable.
 */
enum DwStatus dw_weight_power(double alpha, uint32_t depth, struct DwWeight **out);

/**
 * Seeded random martingale weight with jump size `delta` in `(0, 1)`.
 *
 * # Safety
 * `out` is writable.
 */
enum DwStatus dw_weight_random(double delta, uint64_t seed, uint32_t depth, struct DwWeight **out);

/**
 * # Safety
 * `w` is null or a live handle; it must not be used afterwards.
 */
void dw_weight_free(struct DwWeight *w);

/**
 * Tree depth of the weight, 0 for a null handle.
 *
 * # Safety
 * `w` is null or a live handle.
 */
uint32_t dw_weight_depth(const struct DwWeight *w);

/**
 * Copies the leaf values into `out`, which holds `len` doubles.
 *
 * # Safety
 * `w` is a live handle; `out` points to `len` writable doubles.
 */
enum DwStatus dw_weight_values(const struct DwWeight *w, double *out, size_t len);

/**
 * Joint characteristic `sup_I m_I(u^{-1}) m_I(v)`.
 *
 * # Safety
 * `u`, `v` are live handles; `out` is writable.
 */
enum DwStatus dw_char_joint_a2(const struct DwWeight *u, const struct DwWeight *v, double *out);

/**
 * # Safety
 * `w` is a live handle; `out` is writable.
 */
enum DwStatus dw_char_rh1(const struct DwWeight *w, double *out);

/**
 * # Safety
 * `w` is a live handle; `out` is writable.
 */
enum DwStatus dw_char_ainfty(const struct DwWeight *w, double *out);

/**
 * Norm of `op` from `L²(u)` to `L²(v)`.
 *
 * `b` holds the paraproduct symbol's `2^depth` leaf values and is ignored
 * (may be null) for other operators. Martingale signs are drawn from
 * `cfg.seed`. A null `cfg` selects the defaults.
 *
 * # Safety
 * `u`, `v` are live handles; `b` is null or points to `b_len` doubles;
 * `cfg` is null or readable; `out` is writable.
 */
enum DwStatus dw_op_norm(enum DwOperator op,
                         enum DwMethod method,
                         const struct DwWeight *u,
                         const struct DwWeight *v,
                         const double *b,
                         size_t b_len,
                         const struct DwPowerConfig *cfg,
                         struct DwNormEstimate *out);

/**
 * Runs one registered check. `input_json` is a check input object
 * (`{"u": spec, "v": spec, "b": bspec?, "seed": n}`); the report is written
 * to `out` as JSON.
 *
 * # Safety
 * `id` and `input_json` are NUL-terminated strings; `out` is writable.
 */
enum DwStatus dw_check_json(const char *id, const char *input_json, char **out);

/**
 * Runs the default corpus at the given depths and writes the report CSV to
 * `out`. `exact_failures` receives the number of failed exact checks.
 *
 * # Safety
 * `depths` points to `n_depths` values; `out` and `exact_failures` are
 * writable.
 */
enum DwStatus dw_suite_csv(const uint32_t *depths,
                           size_t n_depths,
                           uint64_t seed,
                           char **out,
                           size_t *exact_failures);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DYWEIGHTS_H */
