#ifndef MSC_H
#define MSC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum MscStatus {
  MSC_STATUS_OK = 0,
  MSC_STATUS_NULL_POINTER = 1,
  MSC_STATUS_INVALID_ARGUMENT = 2,
  MSC_STATUS_IO = 3,
  MSC_STATUS_PARSE = 4,
  MSC_STATUS_VALIDATION = 5,
  MSC_STATUS_OVERFLOW = 6,
  MSC_STATUS_NOT_FOUND = 7,
  MSC_STATUS_PANIC = 8,
} MscStatus;

typedef enum MscDtype {
  MSC_DTYPE_U8 = 0,
  MSC_DTYPE_U16 = 1,
  MSC_DTYPE_F32 = 2,
  MSC_DTYPE_F64 = 3,
} MscDtype;

/**
 * Opaque Morse-Smale complex handle.
 */
typedef struct MscComplex MscComplex;

/**
 * Opaque scalar field handle.
 */
typedef struct MscField MscField;

typedef struct MscCriticalPoint {
  uint32_t id;
  /**
   * 0 minimum, 1 and 2 saddles, 3 maximum.
   */
  uint8_t index;
  uint64_t cell;
  /**
   * Doubled lattice coordinates.
   */
  uint64_t position[3];
  double value;
} MscCriticalPoint;

typedef struct MscArc {
  uint32_t src;
  uint32_t dst;
  uint64_t multiplicity;
} MscArc;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a field from `len = nx * ny * nz` values, x fastest.
 */
enum MscStatus msc_field_new(size_t nx,
                             size_t ny,
                             size_t nz,
                             const double *values,
                             size_t len,
                             struct MscField **out);

/**
 * Reads a raw volume file. `path` is a NUL-terminated UTF-8 string.
 */
enum MscStatus msc_field_from_raw(const char *path,
                                  size_t nx,
                                  size_t ny,
                                  size_t nz,
                                  enum MscDtype dtype,
                                  bool big_endian,
                                  struct MscField **out);

void msc_field_free(struct MscField *field);

/**
 * Computes the complex. With `segmentation` set, per-vertex and per-cube
 * extremum labels are kept for [`msc_complex_segmentation`].
 */
enum MscStatus msc_compute(const struct MscField *field,
                           bool segmentation,
                           struct MscComplex **out);

/**
 * Parses a JSON document of `len` bytes.
 */
enum MscStatus msc_complex_from_json(const char *json, size_t len, struct MscComplex **out);

void msc_complex_free(struct MscComplex *complex);

/**
 * Number of critical points, or 0 for a null handle.
 */
size_t msc_complex_num_critical_points(const struct MscComplex *complex);

enum MscStatus msc_complex_critical_point(const struct MscComplex *complex,
                                          uint32_t id,
                                          struct MscCriticalPoint *out);

/**
 * Number of arcs, or 0 for a null handle.
 */
size_t msc_complex_num_arcs(const struct MscComplex *complex);

enum MscStatus msc_complex_arc(const struct MscComplex *complex, size_t i, struct MscArc *out);

/**
 * Writes the number of minima, 1-saddles, 2-saddles and maxima to `out[0..4]`.
 */
enum MscStatus msc_complex_counts(const struct MscComplex *complex, size_t *out);

/**
 * Borrows the segmentation labels for dimension 0 (per vertex) or 3 (per
 * cube). The pointer stays valid until the complex is freed.
 */
enum MscStatus msc_complex_segmentation(const struct MscComplex *complex,
                                        uint8_t dim,
                                        const uint32_t **labels,
                                        size_t *len);

/**
 * Runs the Euler and mod-2 boundary checks. `violations` receives the
 * number of boundary violations; a nonzero Euler defect is reported as
 * [`MscStatus::Validation`].
 */
enum MscStatus msc_complex_check(const struct MscComplex *complex, size_t *violations);

/**
 * Serializes to a NUL-terminated JSON string to be released with
 * [`msc_string_free`].
 */
enum MscStatus msc_complex_to_json(const struct MscComplex *complex, char **out);

void msc_string_free(char *s);

/**
 * Message of the last failed call on this thread, empty after a success.
 * Valid until the next call on the same thread.
 */
const char *msc_last_error_message(void);

const char *msc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MSC_H */
