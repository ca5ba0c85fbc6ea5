#ifndef MSSC_H
#define MSSC_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MsscStatus {
  MSSC_STATUS_OK = 0,
  MSSC_STATUS_NULL_POINTER = 1,
  MSSC_STATUS_INVALID_ARGUMENT = 2,
  MSSC_STATUS_DIMENSION_MISMATCH = 3,
  MSSC_STATUS_PARSE = 4,
  MSSC_STATUS_CONFIG = 5,
  MSSC_STATUS_NOT_FOUND = 6,
  MSSC_STATUS_IO = 7,
  MSSC_STATUS_JSON = 8,
  MSSC_STATUS_INVALID_UTF8 = 9,
  MSSC_STATUS_BUFFER_TOO_SMALL = 10,
  MSSC_STATUS_PANIC = 11,
} MsscStatus;

/**
 * A dataset owned by the library.
 */
typedef struct MsscDataset MsscDataset;

/**
 * The outcome of one clustering run.
 */
typedef struct MsscResult MsscResult;

/**
 * Accuracy, time and LIMA number of one algorithm, for dominance checks.
 */
typedef struct MsscScore {
  double accuracy;
  double time;
  size_t lima_number;
} MsscScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mssc_version(void);

/**
 * Message for the last error on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *mssc_last_error_message(void);

/**
 * Copies `m * n` row-major values into a new dataset.
 *
 * # Safety
 * `values` must point to `m * n` readable doubles; `out` must be writable.
 */
enum MsscStatus mssc_dataset_new(const double *values,
                                 size_t m,
                                 size_t n,
                                 struct MsscDataset **out);

/**
 * Loads a delimited text or TSPLIB file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum MsscStatus mssc_dataset_load(const char *path, bool skip_header, struct MsscDataset **out);

/**
 * # Safety
 * `data` must be a live handle; `m` and `n` must be writable.
 */
enum MsscStatus mssc_dataset_shape(const struct MsscDataset *data, size_t *m, size_t *n);

/**
 * # Safety
 * `data` must come from this library and not be used afterwards. NULL is ignored.
 */
void mssc_dataset_free(struct MsscDataset *data);

/**
 * Runs the algorithm described by `spec_json` (for example
 * `{"algorithm": "big-means", "s": 1000}`) with `k` clusters.
 *
 * # Safety
 * `data` must be a live handle, `spec_json` a NUL-terminated string and
 * `out` writable.
 */
enum MsscStatus mssc_run(const struct MsscDataset *data,
                         const char *spec_json,
                         size_t k,
                         uint64_t seed,
                         struct MsscResult **out);

/**
 * # Safety
 * `result` must be a live handle; `out` writable.
 */
enum MsscStatus mssc_result_objective(const struct MsscResult *result, double *out);

/**
 * # Safety
 * `result` must be a live handle; `out` writable.
 */
enum MsscStatus mssc_result_elapsed_seconds(const struct MsscResult *result, double *out);

/**
 * Distance evaluations, samples processed and local-search iterations.
 *
 * # Safety
 * `result` must be a live handle; every out-pointer writable.
 */
enum MsscStatus mssc_result_counts(const struct MsscResult *result,
                                   uint64_t *n_d,
                                   uint64_t *n_s,
                                   size_t *iterations);

/**
 * # Safety
 * `result` must be a live handle; `k` and `n` writable.
 */
enum MsscStatus mssc_result_shape(const struct MsscResult *result, size_t *k, size_t *n);

/**
 * Copies the `k * n` row-major centroid values into `buf`.
 *
 * # Safety
 * `buf` must have room for `len` doubles.
 */
enum MsscStatus mssc_result_centroids(const struct MsscResult *result, double *buf, size_t len);

/**
 * Copies one label per point into `buf`.
 *
 * # Safety
 * `buf` must have room for `len` values.
 */
enum MsscStatus mssc_result_labels(const struct MsscResult *result, size_t *buf, size_t len);

/**
 * Serializes the result as JSON. Free the string with [`mssc_string_free`].
 *
 * # Safety
 * `result` must be a live handle; `out` writable.
 */
enum MsscStatus mssc_result_to_json(const struct MsscResult *result, bool omit_timing, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards. NULL is ignored.
 */
void mssc_string_free(char *s);

/**
 * # Safety
 * `result` must come from this library and not be used afterwards. NULL is ignored.
 */
void mssc_result_free(struct MsscResult *result);

/**
 * `100 * (f - f_star) / f_star`.
 *
 * # Safety
 * `out` must be writable.
 */
enum MsscStatus mssc_relative_error(double f, double f_star, double *out);

/**
 * LIMA number of a named algorithm (case-insensitive, common aliases accepted).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` writable.
 */
enum MsscStatus mssc_lima_number(const char *name, size_t *out);

/**
 * Whether `b` LIMA-dominates `a`. Times within a relative `time_rel_tol`
 * of each other count as equal.
 *
 * # Safety
 * `out` must be writable.
 */
enum MsscStatus mssc_dominates(struct MsscScore b,
                               struct MsscScore a,
                               double time_rel_tol,
                               bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MSSC_H */
