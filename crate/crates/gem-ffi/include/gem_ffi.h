#ifndef GEM_FFI_H
#define GEM_FFI_H

/* Generated by cbindgen from the gem-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum GemStatus {
  GEM_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  GEM_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  GEM_STATUS_INVALID_UTF8 = 2,
  /**
   * File could not be read or written.
   */
  GEM_STATUS_IO = 3,
  /**
   * The data violates an invariant (missing value, rank deficiency, ...).
   */
  GEM_STATUS_DATA = 4,
  /**
   * A formula, term or option was invalid.
   */
  GEM_STATUS_ARGUMENT = 5,
  /**
   * An output buffer was too small.
   */
  GEM_STATUS_BUFFER_TOO_SMALL = 6,
} GemStatus;

/**
 * Opaque dataset handle.
 */
typedef struct GemDataset {
  uint8_t _private[0];
} GemDataset;

/**
 * Opaque fitted-model handle (decomposition plus the dataset it came from).
 */
typedef struct GemModel {
  uint8_t _private[0];
} GemModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or null.
 * Valid until the next failing call on the same thread.
 */
const char *gem_last_error_message(void);

/**
 * Library version as a static string; never freed.
 */
const char *gem_version(void);

/**
 * Free a string returned by this library.
 *
 * # Safety
 * `s` must have been returned by a gem_* function documented to transfer
 * string ownership, and must not be used afterwards.
 */
void gem_string_free(char *s);

/**
 * Load a dataset from CSV. `responses` selects the response columns by
 * prefix, `first:last` header range or comma list; `id_column` may be null.
 *
 * # Safety
 * `path` and `responses` must be valid NUL-terminated strings; `id_column`
 * may be null; `out` must point to writable storage for one pointer.
 */
enum GemStatus gem_dataset_load_csv(const char *path,
                                    const char *responses,
                                    const char *id_column,
                                    struct GemDataset **out);

/**
 * # Safety
 * `handle` must come from [`gem_dataset_load_csv`] and not be freed twice.
 */
void gem_dataset_free(struct GemDataset *handle);

/**
 * Sample and response counts of a dataset.
 *
 * # Safety
 * `handle` must be a live dataset handle; `n_samples` and `n_responses`
 * must be writable or null.
 */
enum GemStatus gem_dataset_dims(const struct GemDataset *handle,
                                uintptr_t *n_samples,
                                uintptr_t *n_responses);

/**
 * Fit a model formula (e.g. `"y ~ disease + age"`) to a dataset. The model
 * handle keeps its own copy of the dataset.
 *
 * # Safety
 * `dataset` must be a live dataset handle, `formula` a valid string and
 * `out` writable.
 */
enum GemStatus gem_fit(const struct GemDataset *dataset,
                       const char *formula,
                       struct GemModel **out);

/**
 * # Safety
 * `handle` must come from [`gem_fit`] and not be freed twice.
 */
void gem_model_free(struct GemModel *handle);

/**
 * Number of model terms (intercept excluded).
 *
 * # Safety
 * `handle` must be a live model handle.
 */
uintptr_t gem_model_term_count(const struct GemModel *handle);

/**
 * Name of term `index` (e.g. `"f1"` or `"f1:f2"`). Free with
 * [`gem_string_free`].
 *
 * # Safety
 * `handle` must be a live model handle.
 */
char *gem_model_term_name(const struct GemModel *handle, uintptr_t index);

/**
 * Copy the ER matrix of a term into `buffer` (row-major, n_samples x
 * n_responses). `buffer_len` is the buffer capacity in doubles.
 *
 * # Safety
 * `handle` must be a live model handle, `term` a valid string and `buffer`
 * writable for `buffer_len` doubles.
 */
enum GemStatus gem_model_er_matrix(const struct GemModel *handle,
                                   const char *term,
                                   double *buffer,
                                   uintptr_t buffer_len);

/**
 * Persist the fitted decomposition as JSON (coefficients and metadata;
 * pass nonzero `embed_matrices` to include effect/residual/ER matrices).
 *
 * # Safety
 * `handle` must be a live model handle and `path` a valid string.
 */
enum GemStatus gem_model_save_json(const struct GemModel *handle,
                                   const char *path,
                                   int32_t embed_matrices);

/**
 * PCA of a term's ER matrix: writes up to `ncomp` explained-variance
 * fractions into `explvar`.
 *
 * # Safety
 * `handle` must be a live model handle, `term` a valid string and
 * `explvar` writable for `ncomp` doubles.
 */
enum GemStatus gem_model_er_pca_explvar(const struct GemModel *handle,
                                        const char *term,
                                        uintptr_t ncomp,
                                        double *explvar);

/**
 * Leave-one-out PLS-DA (or PLS regression) of a main-effect term against
 * its own variable: writes per-component cross-validated error
 * (misclassification fraction or RMSE) into `errors` and the 1-SE
 * component choice into `selected`.
 *
 * # Safety
 * `handle` must be a live model handle, `term` a valid string, `errors`
 * writable for `ncomp` doubles and `selected` writable or null.
 */
enum GemStatus gem_model_er_pls_cv(const struct GemModel *handle,
                                   const char *term,
                                   uintptr_t ncomp,
                                   double *errors,
                                   uintptr_t *selected);

/**
 * Leave-one-out elastic net of a main-effect term against its own
 * variable (binomial for a two-level factor, gaussian for a covariate).
 * Writes the 1-SE lambda and the size of its nonzero set.
 *
 * # Safety
 * `handle` must be a live model handle, `term` a valid string; the out
 * pointers must be writable or null.
 */
enum GemStatus gem_model_er_enet_cv(const struct GemModel *handle,
                                    const char *term,
                                    double alpha,
                                    uintptr_t nlambda,
                                    double *lambda_opt,
                                    uintptr_t *nonzero_count);

/**
 * Generate a synthetic dataset from a JSON spec string and write it (plus
 * a `.truth.json` sidecar) to `out_csv`.
 *
 * # Safety
 * `spec_json` and `out_csv` must be valid NUL-terminated strings.
 */
enum GemStatus gem_simulate_to_csv(const char *spec_json, const char *out_csv);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GEM_FFI_H */
