/* SPDX-License-Identifier: Apache-2.0 */

#ifndef VGF_H
#define VGF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Simulation mode selector for [`vgf_harness_new`].
 */
typedef enum VgfMode {
  VGF_MODE_ACCURATE = 0,
  VGF_MODE_FAST = 1,
} VgfMode;

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum VgfStatus {
  VGF_STATUS_OK = 0,
  VGF_STATUS_NULL_ARGUMENT = 1,
  VGF_STATUS_INVALID_UTF8 = 2,
  VGF_STATUS_PARSE = 3,
  VGF_STATUS_CONFIG = 4,
  VGF_STATUS_SIMULATION = 5,
  VGF_STATUS_NOT_FOUND = 6,
  VGF_STATUS_INVALID_ARGUMENT = 7,
  VGF_STATUS_CAMPAIGN = 8,
  VGF_STATUS_PANIC = 9,
} VgfStatus;

/**
 * Opaque harness: an elaborated design, its configuration and one
 * simulator instance reused across runs.
 */
typedef struct VgfHarness VgfHarness;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`) and returns the full message length,
 * or 0 when no error has been recorded.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t vgf_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *vgf_version(void);

/**
 * Parses `design_src` and `config_src` (null selects the default
 * configuration) and creates a harness in `mode`.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be a valid
 * pointer to a handle slot.
 */
enum VgfStatus vgf_harness_new(const char *design_src,
                               const char *config_src,
                               enum VgfMode mode,
                               struct VgfHarness **out);

/**
 * Creates a harness for a bundled benchmark.
 *
 * # Safety
 * `name` must be NUL-terminated; `out` must be a valid handle slot.
 */
enum VgfStatus vgf_harness_from_bench(const char *name, enum VgfMode mode, struct VgfHarness **out);

/**
 * Releases a harness. Null is ignored.
 *
 * # Safety
 * `h` must be null or a handle from this library not yet freed.
 */
void vgf_harness_free(struct VgfHarness *h);

/**
 * Number of signals in the harness's elaborated design.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
size_t vgf_harness_signal_count(const struct VgfHarness *h);

/**
 * Resets the design and runs `input`. `status` receives the fork-server
 * verdict: 0 for a clean run, `0xF0 | slot` when property `slot` fired.
 *
 * # Safety
 * `h` must be a live handle; `input` must point to `len` readable bytes
 * (it may be null when `len` is 0); `status` must be writable.
 */
enum VgfStatus vgf_harness_run(struct VgfHarness *h,
                               const uint8_t *input,
                               size_t len,
                               uint32_t *status);

/**
 * Runs a campaign on the harness's design and configuration. `options_json`
 * holds `CampaignOptions` fields (null or `{}` for defaults); the report
 * JSON is returned in `report`, to be released with [`vgf_string_free`].
 *
 * # Safety
 * `h` must be a live handle, `options_json` null or NUL-terminated, and
 * `report` a valid pointer slot.
 */
enum VgfStatus vgf_campaign_run(const struct VgfHarness *h,
                                const char *options_json,
                                char **report);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void vgf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VGF_H */
