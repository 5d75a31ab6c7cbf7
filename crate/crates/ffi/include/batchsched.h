#ifndef BATCHSCHED_H
#define BATCHSCHED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BsStatus {
  BS_STATUS_OK = 0,
  BS_STATUS_NULL_POINTER = 1,
  BS_STATUS_INVALID_UTF8 = 2,
  /**
   * Scenario failed to parse or validate.
   */
  BS_STATUS_INVALID_CONFIG = 3,
  BS_STATUS_INVALID_ARGUMENT = 4,
  BS_STATUS_NOT_POSITIVE_DEFINITE = 5,
  BS_STATUS_CAP_EXCEEDED = 6,
  BS_STATUS_GUARANTEE_VIOLATED = 7,
  BS_STATUS_INTERNAL = 8,
  BS_STATUS_PANIC = 9,
} BsStatus;

typedef enum BsSystemKind {
  BS_SYSTEM_KIND_CONTINUOUS_TIME_INVARIANT = 0,
  BS_SYSTEM_KIND_CONTINUOUS_TIME_VARIANT = 1,
  BS_SYSTEM_KIND_DISCRETE_TIME_INVARIANT = 2,
  BS_SYSTEM_KIND_DISCRETE_TIME_VARIANT = 3,
} BsSystemKind;

/**
 * Validated model and its evaluator.
 */
typedef struct BsModel BsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses and validates a scenario JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum BsStatus bs_model_from_json(const char *json, struct BsModel **out);

/**
 * Deterministic random scenario with budget `r` at every time; `kind` is a
 * `BsSystemKind` value.
 *
 * # Safety
 * `out` must be writable.
 */
enum BsStatus bs_model_random(uint64_t seed,
                              size_t n,
                              size_t m,
                              size_t k,
                              size_t r,
                              uint32_t kind,
                              struct BsModel **out);

/**
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void bs_model_free(struct BsModel *model);

/**
 * Serializes the model as scenario JSON; free with `bs_string_free`.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum BsStatus bs_model_to_json(const struct BsModel *model, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void bs_string_free(char *s);

/**
 * # Safety
 * `model` must be a live handle or null (returns 0).
 */
size_t bs_model_state_dim(const struct BsModel *model);

/**
 * # Safety
 * `model` must be a live handle or null (returns 0).
 */
size_t bs_model_horizon(const struct BsModel *model);

/**
 * # Safety
 * `model` must be a live handle or null (returns 0).
 */
size_t bs_model_sensor_count(const struct BsModel *model);

/**
 * Objective `log det Σ` of the schedule given as a `K × m` mask.
 *
 * # Safety
 * `mask` must point to `mask_len` bytes; `out` must be writable.
 */
enum BsStatus bs_objective_logdet(const struct BsModel *model,
                                  const uint8_t *mask,
                                  size_t mask_len,
                                  double *out);

/**
 * Greedy schedule written to `mask_out`, its objective to `objective_out`.
 *
 * # Safety
 * `mask_out` must point to `mask_len` writable bytes; `objective_out` must
 * be writable.
 */
enum BsStatus bs_greedy_schedule(const struct BsModel *model,
                                 bool lazy,
                                 uint8_t *mask_out,
                                 size_t mask_len,
                                 double *objective_out);

/**
 * Brute-force ratio certificate. `ratio_out` receives the ratio;
 * `json_out`, if not null, receives the certificate JSON.
 *
 * # Safety
 * `ratio_out` must be writable; `json_out` must be null or writable.
 */
enum BsStatus bs_certify(const struct BsModel *model, double *ratio_out, char **json_out);

/**
 * Lower bound on the error trace over all feasible schedules.
 *
 * # Safety
 * `out` must be writable.
 */
enum BsStatus bs_error_lower_bound(const struct BsModel *model, double *out);

/**
 * Per-time sensor count needed for error trace `alpha`.
 *
 * # Safety
 * `out` must be writable.
 */
enum BsStatus bs_min_sensors_for_error(const struct BsModel *model, double alpha, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum BsStatus bs_ellipsoid_log_volume(double logdet_sigma, double epsilon, size_t dim, double *out);

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next library call on the same thread.
 */
const char *bs_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BATCHSCHED_H */
