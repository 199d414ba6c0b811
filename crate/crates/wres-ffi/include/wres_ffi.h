#ifndef WRES_FFI_H
#define WRES_FFI_H

/* Generated by cbindgen from wres-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible entry point.
 */
typedef enum WresStatus {
  WRES_STATUS_OK = 0,
  WRES_STATUS_NULL_ARGUMENT = 1,
  WRES_STATUS_BAD_FUNCTIONAL = 2,
  WRES_STATUS_BAD_FORMAT = 3,
  WRES_STATUS_INDEX_OUT_OF_RANGE = 4,
  WRES_STATUS_COMPUTE_FAILED = 5,
  WRES_STATUS_NUMERIC_FAILED = 6,
  WRES_STATUS_INTERNAL = 7,
} WresStatus;

/**
 * Output format selector for `wres_render`.
 */
typedef enum WresFormat {
  WRES_FORMAT_PLAIN = 0,
  WRES_FORMAT_LATEX = 1,
  WRES_FORMAT_JSON = 2,
} WresFormat;

/**
 * Opaque computed-functional handle.
 */
typedef struct WresResult WresResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Derive one functional. `functional` is 'P' or 'Q' (ASCII, either case).
 * On success `*out` owns the handle; release with `wres_result_free`.
 */
enum WresStatus wres_compute(char functional, struct WresResult **out);

/**
 * Release a handle returned by `wres_compute`. NULL is a no-op.
 */
void wres_result_free(struct WresResult *result);

/**
 * Render the assembled functional statement in the requested format.
 */
enum WresStatus wres_render(const struct WresResult *result, enum WresFormat format, char **out);

/**
 * Exact coefficient of one basis slot (0..=10) of the density, as a
 * rational-function string.
 */
enum WresStatus wres_density_coefficient(const struct WresResult *result,
                                         uintptr_t slot,
                                         char **out);

/**
 * Number of recorded checkpoints, or -1 for a NULL handle.
 */
int64_t wres_checkpoint_count(const struct WresResult *result);

/**
 * Tag of checkpoint `index` (derivation order).
 */
enum WresStatus wres_checkpoint_tag(const struct WresResult *result, uintptr_t index, char **out);

/**
 * Whether checkpoint `index` reproduced its displayed value.
 */
enum WresStatus wres_checkpoint_matches(const struct WresResult *result,
                                        uintptr_t index,
                                        bool *out);

/**
 * Whether the derivation diverged from the displayed tables anywhere.
 */
enum WresStatus wres_has_discrepancy(const struct WresResult *result, bool *out);

/**
 * Rendered discrepancy report with its audit trail; `*out` is NULL when
 * every checkpoint matched.
 */
enum WresStatus wres_report_render(const struct WresResult *result, char **out);

/**
 * Release a string returned by any renderer. NULL is a no-op.
 */
void wres_string_free(char *s);

/**
 * Numeric oracle: `draws` random curvature draws at half-dimension `m`
 * (2 or 3), seeded; writes the worst relative deviation and whether all
 * comparisons stayed within `tolerance`.
 */
enum WresStatus wres_cross_check(uint32_t m,
                                 uint32_t draws,
                                 uint64_t seed,
                                 double tolerance,
                                 double *out_max_rel,
                                 bool *out_ok);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WRES_FFI_H */
