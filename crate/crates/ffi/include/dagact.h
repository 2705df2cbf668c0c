#ifndef DAGACT_H
#define DAGACT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Graph family for [`dagact_growth_probe`].
 */
#define DAGACT_FAMILY_ALTERNATING 0

#define DAGACT_FAMILY_MONOLOGUE 1

/**
 * Cell combination rule for [`dagact_growth_probe`].
 */
#define DAGACT_RULE_SUM 0

#define DAGACT_RULE_MAX 1

/**
 * Result of every fallible call.
 */
typedef enum DagactStatus {
  DAGACT_STATUS_OK = 0,
  /**
   * Bad arguments: null pointers, unknown enum values, invalid sizes.
   */
  DAGACT_STATUS_USAGE = 1,
  /**
   * Unreadable files, malformed input, checkpoint version mismatch.
   */
  DAGACT_STATUS_DATA = 2,
  /**
   * Non-finite values during computation.
   */
  DAGACT_STATUS_NUMERIC = 3,
  /**
   * A panic was caught at the boundary.
   */
  DAGACT_STATUS_INTERNAL = 4,
} DagactStatus;

/**
 * A loaded model. Only ever seen through a pointer.
 */
typedef struct DagactModel DagactModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static nul-terminated string.
 */
const char *dagact_version(void);

/**
 * Message for the most recent failure on this thread, or null if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *dagact_last_error(void);

/**
 * Loads a checkpoint file into a new handle written to `*out`.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum DagactStatus dagact_model_load(const char *path, struct DagactModel **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `model` must come from [`dagact_model_load`] and not be used afterwards.
 */
void dagact_model_free(struct DagactModel *model);

/**
 * Predicts every utterance of the conversation lines in `input`. The result,
 * one line per input conversation with a `predicted` field per utterance, is
 * written to `*out` and must be freed with [`dagact_string_free`].
 *
 * # Safety
 * `model` must be a live handle, `input` a nul-terminated string and `out`
 * a valid pointer.
 */
enum DagactStatus dagact_predict_jsonl(const struct DagactModel *model,
                                       const char *input,
                                       char **out);

/**
 * Scores labeled conversation lines in `input` and writes the report as JSON
 * (`accuracy`, `per_class_f1`, `macro_f1`, `confusion`) to `*out`.
 *
 * # Safety
 * As for [`dagact_predict_jsonl`].
 */
enum DagactStatus dagact_evaluate_jsonl(const struct DagactModel *model,
                                        const char *input,
                                        char **out);

/**
 * Forced-gate probe: writes the sink cell magnitude and its path-count
 * oracle for a conversation of `length` utterances.
 *
 * # Safety
 * `magnitude` and `oracle` must be valid pointers.
 */
enum DagactStatus dagact_growth_probe(size_t length,
                                      int32_t family,
                                      int32_t rule,
                                      double bias,
                                      double *magnitude,
                                      double *oracle);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void dagact_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DAGACT_H */
