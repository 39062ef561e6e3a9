#ifndef MIXLAB_H
#define MIXLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MixlabPattern {
  MIXLAB_PATTERN_LEFT_RIGHT_HALVES = 0,
  MIXLAB_PATTERN_TOP_BOTTOM_HALVES = 1,
  MIXLAB_PATTERN_CHECKERBOARD = 2,
  MIXLAB_PATTERN_STRIPES = 3,
  MIXLAB_PATTERN_HORIZONTAL_STRIPES = 4,
} MixlabPattern;

/**
 * Result codes. Values 2, 3 and 4 match the command-line exit codes.
 */
typedef enum MixlabStatus {
  MIXLAB_STATUS_OK = 0,
  MIXLAB_STATUS_FAILED = 1,
  MIXLAB_STATUS_INVALID_ARGUMENT = 2,
  MIXLAB_STATUS_RESOLUTION_TOO_COARSE = 3,
  MIXLAB_STATUS_MISSING_VELOCITY = 4,
  MIXLAB_STATUS_NULL_POINTER = 5,
  MIXLAB_STATUS_NOT_MEAN_ZERO = 6,
  MIXLAB_STATUS_NOT_BINARY = 7,
  MIXLAB_STATUS_DEGENERATE = 8,
  MIXLAB_STATUS_IO = 9,
  MIXLAB_STATUS_PARSE = 10,
  MIXLAB_STATUS_STAGE_ORDER = 11,
  MIXLAB_STATUS_SIGMA_VIOLATION = 12,
  MIXLAB_STATUS_PANIC = 13,
} MixlabStatus;

/**
 * Opaque tracer field.
 */
typedef struct MixlabField MixlabField;

/**
 * Opaque cellular flow.
 */
typedef struct MixlabFlow MixlabFlow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (always
 * NUL-terminated when `len > 0`) and returns its full length in bytes.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null.
 */
size_t mixlab_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mixlab_version(void);

/**
 * Builds a canonical binary pattern on a `2^m` grid. `level` is ignored
 * for the two halves patterns.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MixlabStatus mixlab_field_pattern(uint32_t m,
                                       enum MixlabPattern pattern,
                                       uint32_t level,
                                       struct MixlabField **out);

/**
 * Binary field from `4^m` signs in cell order `i * 2^m + j` (`i` the
 * column from the left, `j` the row from the bottom).
 *
 * # Safety
 * `signs` must be valid for `len` elements; `out` must be valid.
 */
enum MixlabStatus mixlab_field_from_signs(uint32_t m,
                                          const int8_t *signs,
                                          size_t len,
                                          struct MixlabField **out);

/**
 * Continuous field from `4^m` values in cell order.
 *
 * # Safety
 * `values` must be valid for `len` elements; `out` must be valid.
 */
enum MixlabStatus mixlab_field_from_values(uint32_t m,
                                           const double *values,
                                           size_t len,
                                           struct MixlabField **out);

/**
 * Reads a field file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid.
 */
enum MixlabStatus mixlab_field_read(const char *path, struct MixlabField **out);

/**
 * Writes a field file.
 *
 * # Safety
 * `field` must be a live handle and `path` a NUL-terminated string.
 */
enum MixlabStatus mixlab_field_write(const struct MixlabField *field, const char *path);

/**
 * Grid exponent `m` of the field, or 0 for a null handle.
 *
 * # Safety
 * `field` must be a live handle or null.
 */
uint32_t mixlab_field_m(const struct MixlabField *field);

/**
 * Copies the `4^m` cell values into `out`.
 *
 * # Safety
 * `field` must be a live handle and `out` valid for `len` elements.
 */
enum MixlabStatus mixlab_field_values(const struct MixlabField *field, double *out, size_t len);

/**
 * Finest level at which the field is mixed, or -1 if none.
 *
 * # Safety
 * `field` must be a live handle and `out` valid.
 */
enum MixlabStatus mixlab_field_mixed_level(const struct MixlabField *field, int32_t *out);

/**
 * # Safety
 * `field` must be a handle from this library, or null.
 */
void mixlab_field_free(struct MixlabField *field);

/**
 * Geometric mixing scale with accuracy `kappa` (other constants default).
 *
 * # Safety
 * `field` must be a live handle and `out` valid.
 */
enum MixlabStatus mixlab_geometric_mixing_scale(const struct MixlabField *field,
                                                double kappa,
                                                double *out);

/**
 * `H^-1` norm on a periodic box of side `padding`.
 *
 * # Safety
 * `field` must be a live handle and `out` valid.
 */
enum MixlabStatus mixlab_functional_mixing_scale(const struct MixlabField *field,
                                                 size_t padding,
                                                 double *out);

/**
 * Creates a flow from an initial field (copied), the tiling exponent and a
 * JSON array of block descriptors, one per stage.
 *
 * # Safety
 * `initial` must be a live handle, `blocks_json` a NUL-terminated string
 * and `out` valid.
 */
enum MixlabStatus mixlab_flow_new(const struct MixlabField *initial,
                                  uint32_t ell0,
                                  const char *blocks_json,
                                  struct MixlabFlow **out);

/**
 * Executes stage `n`, which must be the next unexecuted stage.
 *
 * # Safety
 * `flow` must be a live handle.
 */
enum MixlabStatus mixlab_flow_compose_stage(struct MixlabFlow *flow, size_t n);

/**
 * Copies the current state into a new field handle.
 *
 * # Safety
 * `flow` must be a live handle and `out` valid.
 */
enum MixlabStatus mixlab_flow_state(const struct MixlabFlow *flow, struct MixlabField **out);

/**
 * # Safety
 * `flow` must be a handle from this library, or null.
 */
void mixlab_flow_free(struct MixlabFlow *flow);

/**
 * Runs a manifest file and writes its artifacts into `out_dir`.
 *
 * # Safety
 * Both arguments must be NUL-terminated strings.
 */
enum MixlabStatus mixlab_run_manifest(const char *manifest_path, const char *out_dir);

/**
 * The constants `eta`, `omega` and `C(gamma_bar)` of the lower bound.
 *
 * # Safety
 * The output pointers must be valid.
 */
enum MixlabStatus mixlab_proof_constants(double gamma_bar,
                                         double alpha,
                                         double *eta,
                                         double *omega,
                                         double *c_gamma);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIXLAB_H */
