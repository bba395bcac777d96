#ifndef METASTAB_H
#define METASTAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum MsStatus {
  MS_STATUS_OK = 0,
  MS_STATUS_NULL_POINTER = 1,
  MS_STATUS_INVALID_INPUT = 2,
  MS_STATUS_PARSE = 3,
  MS_STATUS_INVALID_GENERATOR = 4,
  MS_STATUS_TRIVIAL_DYNAMICS = 5,
  MS_STATUS_NOT_METASTABLE = 6,
  MS_STATUS_NUMERICAL = 7,
  MS_STATUS_BUFFER_TOO_SMALL = 8,
  MS_STATUS_PANIC = 99,
} MsStatus;

// Regime classification of a window.
typedef enum MsVerdict {
  MS_VERDICT_INITIAL = 0,
  MS_VERDICT_FINAL = 1,
  MS_VERDICT_METASTABLE = 2,
  MS_VERDICT_INDETERMINATE = 3,
} MsVerdict;

// Opaque model handle.
typedef struct MsModel MsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ms_version(void);

// Message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next call into the library from the same thread.
const char *ms_last_error(void);

// Builds a named built-in model. `names` and `values` hold `n_params`
// parameters; both may be NULL when `n_params` is 0.
//
// # Safety
// `name` must be a NUL-terminated string, `names` an array of `n_params`
// such strings, `values` an array of `n_params` doubles, and `out` valid
// for writes.
enum MsStatus ms_model_builtin(const char *name,
                               const char *const *names,
                               const double *values,
                               size_t n_params,
                               uint64_t seed,
                               struct MsModel **out);

// Builds a model from the text of a model file (quantum JSON, classical
// JSON, or an edge list).
//
// # Safety
// `text` must be a NUL-terminated string and `out` valid for writes.
enum MsStatus ms_model_parse(const char *text, uint64_t seed, struct MsModel **out);

// Releases a handle; NULL is ignored.
//
// # Safety
// `model` must come from a constructor of this library and not be used
// afterwards.
void ms_model_free(struct MsModel *model);

// Number of eigenvalues (`D²` for quantum models, `n` for chains).
//
// # Safety
// `model` must be a live handle and `out` valid for writes.
enum MsStatus ms_model_modes(const struct MsModel *model, size_t *out);

// Copies the eigenvalues into `re` and `im`, each of length `cap`.
// Fails with `BufferTooSmall` when `cap` is below `ms_model_modes`.
//
// # Safety
// `re` and `im` must be valid for `cap` writes.
enum MsStatus ms_eigenvalues(const struct MsModel *model, double *re, double *im, size_t cap);

// `d_I(t)` and `d_ss(t)`.
//
// # Safety
// `model` must be a live handle; the out-pointers valid for writes.
enum MsStatus ms_distances(const struct MsModel *model,
                           double t,
                           double *d_identity,
                           double *d_stationary);

// `C_Δ(t'', t')`.
//
// # Safety
// `model` must be a live handle and `out` valid for writes.
enum MsStatus ms_change_measure(const struct MsModel *model, double t2, double t1, double *out);

// Regime of the window `(t'', t')` and its `C_Δ`.
//
// # Safety
// `model` must be a live handle; the out-pointers valid for writes.
enum MsStatus ms_classify(const struct MsModel *model,
                          double t2,
                          double t1,
                          enum MsVerdict *verdict,
                          double *c_delta);

// `τ₀` and `τ_ss`; a timescale that was not found is reported as NaN.
//
// # Safety
// `model` must be a live handle; the out-pointers valid for writes.
enum MsStatus ms_timescales(const struct MsModel *model, double *tau_0, double *tau_ss);

// Runs the bound battery with default grid settings. Reports the number
// of evaluated rows and of rows with slack below `-tol`.
//
// # Safety
// `model` must be a live handle; the out-pointers valid for writes.
enum MsStatus ms_verify_bounds(const struct MsModel *model,
                               double tol,
                               uint64_t seed,
                               size_t *rows,
                               size_t *failures);

// Roots `E₋ <= E₊` of `E² − E + c = 0` for `0 <= c <= 1/4`.
//
// # Safety
// The out-pointers must be valid for writes.
enum MsStatus ms_thresholds(double c, double *e_minus, double *e_plus);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* METASTAB_H */
