#ifndef EGNN_H
#define EGNN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EgnnStatus {
  EGNN_STATUS_OK = 0,
  EGNN_STATUS_NULL_POINTER = 1,
  EGNN_STATUS_INVALID_HYPER_PARAMS = 2,
  EGNN_STATUS_OUT_OF_RANGE = 3,
  EGNN_STATUS_NON_FINITE = 4,
  EGNN_STATUS_DIMENSION_MISMATCH = 5,
  EGNN_STATUS_EMPTY_MODEL = 6,
  EGNN_STATUS_INVALID_JSON = 7,
  EGNN_STATUS_BUFFER_TOO_SMALL = 8,
  EGNN_STATUS_INVALID_ARGUMENT = 9,
  EGNN_STATUS_PANIC = 10,
} EgnnStatus;

typedef enum EgnnUpdateRule {
  EGNN_UPDATE_RULE_CLASS_AWARE = 0,
  EGNN_UPDATE_RULE_LISTING = 1,
} EgnnUpdateRule;

/**
 * Classifier plus the random source used for its first estimate.
 */
typedef struct EgnnModel EgnnModel;

typedef struct EgnnNormalizer EgnnNormalizer;

typedef struct EgnnHyperParams {
  double rho0;
  uint64_t hr;
  double eta;
  enum EgnnUpdateRule update_rule;
} EgnnHyperParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread. Valid until the next call
 * into the library from the same thread.
 */
const char *egnn_last_error(void);

struct EgnnHyperParams egnn_default_hyper_params(void);

/**
 * # Safety
 * `params` may be null (defaults). `out_model` must be writable.
 */
enum EgnnStatus egnn_model_new(const struct EgnnHyperParams *params,
                               uint64_t seed,
                               struct EgnnModel **out_model);

/**
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void egnn_model_free(struct EgnnModel *model);

/**
 * Restricts the first random estimate to the given classes.
 *
 * # Safety
 * `classes` must point at `len` values.
 */
enum EgnnStatus egnn_model_set_classes(struct EgnnModel *model,
                                       const uint32_t *classes,
                                       size_t len);

/**
 * One prequential step. Writes the class predicted before learning.
 *
 * # Safety
 * `x` must point at `n` values; `out_predicted` may be null.
 */
enum EgnnStatus egnn_model_learn(struct EgnnModel *model,
                                 const double *x,
                                 size_t n,
                                 uint32_t label,
                                 uint32_t *out_predicted);

/**
 * Predicts without learning. When `probabilities` is non-null it receives
 * one softmax value per granule; `capacity` must be at least the granule
 * count, which is written to `out_granules` once prediction succeeds.
 *
 * # Safety
 * `x` must point at `n` values, `probabilities` at `capacity` values.
 */
enum EgnnStatus egnn_model_predict(const struct EgnnModel *model,
                                   const double *x,
                                   size_t n,
                                   uint32_t *out_class,
                                   double *probabilities,
                                   size_t capacity,
                                   size_t *out_granules);

/**
 * # Safety
 * `model` must be a live handle or null (returns 0).
 */
size_t egnn_model_granule_count(const struct EgnnModel *model);

/**
 * Current maximum granule width; NaN for a null handle.
 *
 * # Safety
 * `model` must be a live handle or null.
 */
double egnn_model_rho(const struct EgnnModel *model);

/**
 * # Safety
 * `model` must be a live handle; `out_ii` must be writable.
 */
enum EgnnStatus egnn_model_interpretability(const struct EgnnModel *model, double *out_ii);

/**
 * Serializes the model. Free the string with [`egnn_string_free`].
 *
 * # Safety
 * `model` must be a live handle; `out_json` must be writable.
 */
enum EgnnStatus egnn_model_to_json(const struct EgnnModel *model, char **out_json);

/**
 * Restores a model. The random source is reseeded from `seed`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out_model` must be writable.
 */
enum EgnnStatus egnn_model_from_json(const char *json, uint64_t seed, struct EgnnModel **out_model);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void egnn_string_free(char *s);

/**
 * Online min-max normalizer.
 */
struct EgnnNormalizer *egnn_normalizer_new(void);

/**
 * # Safety
 * `normalizer` must come from this library and not be used afterwards.
 */
void egnn_normalizer_free(struct EgnnNormalizer *normalizer);

/**
 * Updates the running ranges with `x` and writes the scaled vector.
 *
 * # Safety
 * `x` and `out_x` must each point at `n` values.
 */
enum EgnnStatus egnn_normalizer_normalize(struct EgnnNormalizer *normalizer,
                                          const double *x,
                                          size_t n,
                                          double *out_x);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EGNN_H */
