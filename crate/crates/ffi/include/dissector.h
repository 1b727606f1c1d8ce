#ifndef DISSECTOR_H
#define DISSECTOR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DxHeuristic {
  DX_HEURISTIC_MMESH = 0,
  DX_HEURISTIC_CFH = 1,
  DX_HEURISTIC_AREAS = 2,
  DX_HEURISTIC_NONE = 3,
} DxHeuristic;

typedef enum DxStatus {
  DX_STATUS_OK = 0,
  DX_STATUS_NULL_ARGUMENT = 1,
  DX_STATUS_CONFIG = 2,
  DX_STATUS_FORMAT = 3,
  DX_STATUS_CONSISTENCY = 4,
  DX_STATUS_CORRUPTION = 5,
  DX_STATUS_IO = 6,
  DX_STATUS_INVALID_INPUT = 7,
  DX_STATUS_OUT_OF_RANGE = 8,
  DX_STATUS_PANIC = 9,
} DxStatus;

/**
 * A loaded bundle.
 */
typedef struct DxBundle DxBundle;

/**
 * Explanations of one neuron.
 */
typedef struct DxResults DxResults;

typedef struct DxSearchParams {
  enum DxHeuristic heuristic;
  size_t b_first;
  size_t b_rest;
  size_t max_len;
} DxSearchParams;

typedef struct DxDims {
  size_t n_samples;
  size_t n_concepts;
  size_t n_neurons;
  size_t grid_height;
  size_t grid_width;
} DxDims;

/**
 * One explained activation range. `hi` is +inf for open ranges.
 */
typedef struct DxRecord {
  size_t neuron;
  uint32_t cluster;
  double lo;
  double hi;
  uint64_t iou_num;
  uint64_t iou_den;
  uint64_t visited;
  bool has_formula;
  bool degenerate;
} DxRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *dx_last_error_message(void);

/**
 * Library version, static storage.
 */
const char *dx_version(void);

/**
 * Search parameters used when `dx_explain_neuron` gets a null pointer.
 */
struct DxSearchParams dx_search_params_default(void);

/**
 * Loads a bundle directory. `*out` is set only on success.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DxStatus dx_bundle_load(const char *path, bool verify_meta, struct DxBundle **out);

/**
 * # Safety
 * `bundle` must come from `dx_bundle_load` and not be freed twice. Null is ignored.
 */
void dx_bundle_free(struct DxBundle *bundle);

/**
 * # Safety
 * `bundle` must be a live handle and `out` a valid pointer.
 */
enum DxStatus dx_bundle_dims(const struct DxBundle *bundle, struct DxDims *out);

/**
 * Clusters one neuron's activations into `n_cls` ranges and explains each.
 * With `n_cls == 0` a single top-quantile range is used instead. `params`
 * may be null for defaults.
 *
 * # Safety
 * `bundle` must be a live handle, `params` null or valid, `out` valid.
 */
enum DxStatus dx_explain_neuron(const struct DxBundle *bundle,
                                size_t neuron,
                                size_t n_cls,
                                uint64_t seed,
                                const struct DxSearchParams *params,
                                struct DxResults **out);

/**
 * # Safety
 * `results` must be a live handle or null (returns 0).
 */
size_t dx_results_len(const struct DxResults *results);

/**
 * # Safety
 * `results` must be a live handle and `out` a valid pointer.
 */
enum DxStatus dx_results_get(const struct DxResults *results, size_t index, struct DxRecord *out);

/**
 * Formula text of a record: concept names when `named`, otherwise compact
 * ids such as `3 OR 7 AND_NOT 2`. Null when the record has no formula or
 * the index is out of range. Release with `dx_string_free`.
 *
 * # Safety
 * `results` must be a live handle or null.
 */
char *dx_results_formula(const struct DxResults *results, size_t index, bool named);

/**
 * # Safety
 * `results` must come from `dx_explain_neuron` and not be freed twice. Null is ignored.
 */
void dx_results_free(struct DxResults *results);

/**
 * # Safety
 * `s` must come from `dx_results_formula` and not be freed twice. Null is ignored.
 */
void dx_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DISSECTOR_H */
