#ifndef SOUSCHEF_H
#define SOUSCHEF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SouschefStatus {
  SOUSCHEF_STATUS_OK = 0,
  SOUSCHEF_STATUS_NULL_ARGUMENT = 1,
  SOUSCHEF_STATUS_INVALID_UTF8 = 2,
  SOUSCHEF_STATUS_INVALID_ARGUMENT = 3,
  SOUSCHEF_STATUS_REJECTED = 4,
  SOUSCHEF_STATUS_IO = 5,
  SOUSCHEF_STATUS_PANIC = 6,
} SouschefStatus;

/**
 * Opaque runtime handle.
 */
typedef struct SouschefRuntime SouschefRuntime;

/**
 * Plain-data view of the latest telemetry snapshot. `setpoint` is NaN
 * when the controller has no setpoint.
 */
typedef struct SouschefTelemetry {
  uint64_t tick;
  double time;
  double pan_temp;
  double setpoint;
  double power;
  double servo_angle;
  bool stopped;
  bool pan_present;
  bool recipe_complete;
  uint32_t active_warnings;
} SouschefTelemetry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create a runtime with the bundled recipes and an in-memory event log.
 * `config_toml` may be NULL for defaults.
 *
 * # Safety
 * `config_toml` must be NULL or a NUL-terminated string; `out` must be a
 * valid pointer.
 */
enum SouschefStatus souschef_runtime_new(const char *config_toml, struct SouschefRuntime **out);

/**
 * # Safety
 * `rt` must be NULL or a handle from `souschef_runtime_new` not yet freed.
 */
void souschef_runtime_free(struct SouschefRuntime *rt);

/**
 * Validate and store a recipe document. On rejection the error message
 * lists every diagnostic.
 *
 * # Safety
 * `rt` must be a live handle and `json` a NUL-terminated string.
 */
enum SouschefStatus souschef_runtime_load_recipe_json(struct SouschefRuntime *rt, const char *json);

/**
 * Replace the plant script driving the simulated world.
 *
 * # Safety
 * `rt` must be a live handle and `json` a NUL-terminated string.
 */
enum SouschefStatus souschef_runtime_load_script_json(struct SouschefRuntime *rt, const char *json);

/**
 * Submit a command, e.g. `{"kind":"set_setpoint","celsius":100}`. The
 * command takes effect on the next step. `out_id` may be NULL.
 *
 * # Safety
 * `rt` must be a live handle, `json` a NUL-terminated string and `out_id`
 * NULL or valid.
 */
enum SouschefStatus souschef_runtime_post_command_json(struct SouschefRuntime *rt,
                                                       const char *json,
                                                       uint64_t *out_id);

/**
 * Advance `ticks` control ticks.
 *
 * # Safety
 * `rt` must be a live handle.
 */
enum SouschefStatus souschef_runtime_step(struct SouschefRuntime *rt, uint64_t ticks);

/**
 * # Safety
 * `rt` must be a live handle and `out` a valid pointer.
 */
enum SouschefStatus souschef_runtime_telemetry(struct SouschefRuntime *rt,
                                               struct SouschefTelemetry *out);

/**
 * Full snapshot as JSON. Returns NULL on error; free with
 * `souschef_string_free`.
 *
 * # Safety
 * `rt` must be a live handle.
 */
char *souschef_runtime_telemetry_json(struct SouschefRuntime *rt);

/**
 * Number of event-log entries in `category` (e.g. "transition").
 *
 * # Safety
 * `rt` must be a live handle, `category` a NUL-terminated string and `out`
 * a valid pointer.
 */
enum SouschefStatus souschef_runtime_log_count(struct SouschefRuntime *rt,
                                               const char *category,
                                               uint64_t *out);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, freed once.
 */
void souschef_string_free(char *s);

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next library call on the same thread.
 */
const char *souschef_last_error_message(void);

/**
 * Library version, static storage.
 */
const char *souschef_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOUSCHEF_H */
