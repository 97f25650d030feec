#ifndef INTCUR_H
#define INTCUR_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Status codes returned by every fallible entry point.
typedef enum IntcurStatus {
  INTCUR_STATUS_OK = 0,
  INTCUR_STATUS_NULL_ARGUMENT = 1,
  INTCUR_STATUS_INVALID_UTF8 = 2,
  INTCUR_STATUS_INPUT = 3,
  INTCUR_STATUS_FORMAT = 4,
  INTCUR_STATUS_IO = 5,
  INTCUR_STATUS_UNSUPPORTED_DIMENSION = 6,
  INTCUR_STATUS_REFINEMENT = 7,
  INTCUR_STATUS_DEGENERATE_LEVEL = 8,
  INTCUR_STATUS_GEOMETRY = 9,
  INTCUR_STATUS_SOLVER = 10,
  INTCUR_STATUS_HYPOTHESIS = 11,
  INTCUR_STATUS_PANIC = 12,
} IntcurStatus;

// Outcome of a rigidity check.
typedef enum IntcurVerdict {
  INTCUR_VERDICT_CONSISTENT_WITH_ISOMETRY = 0,
  INTCUR_VERDICT_HYPOTHESES_VIOLATED = 1,
  INTCUR_VERDICT_RIGIDITY_FAILED = 2,
} IntcurVerdict;

// An integral current on some complex.
typedef struct IntcurCurrent IntcurCurrent;

// A loaded current file: source mesh, named chains and maps, optional target.
typedef struct IntcurDocument IntcurDocument;

// A piecewise-affine map from a source complex.
typedef struct IntcurMap IntcurMap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Valid until the next call.
const char *intcur_last_error(void);

// Loads a current file from `path`.
//
// # Safety
// `path` must be a nul-terminated string; `out` must be writable.
enum IntcurStatus intcur_document_load(const char *path, struct IntcurDocument **out);

// Parses a current file from JSON text.
//
// # Safety
// `json` must be a nul-terminated string; `out` must be writable.
enum IntcurStatus intcur_document_parse(const char *json, struct IntcurDocument **out);

// Generates a named instance from a JSON spec such as `{"kind":"disk","n_segments":512}`.
//
// # Safety
// `spec_json` must be a nul-terminated string; `out` must be writable.
enum IntcurStatus intcur_document_generate(const char *spec_json, struct IntcurDocument **out);

// Serializes the document as JSON; release the string with [`intcur_string_free`].
//
// # Safety
// `doc` must be a live handle; `out` must be writable.
enum IntcurStatus intcur_document_to_json(const struct IntcurDocument *doc, char **out);

// # Safety
// `doc` must be null or a handle not yet freed.
void intcur_document_free(struct IntcurDocument *doc);

// Copies chain `name` from the source section, or from the target section when `in_target` is nonzero.
//
// # Safety
// `doc` must be a live handle; `name` a nul-terminated string; `out` writable.
enum IntcurStatus intcur_document_chain(const struct IntcurDocument *doc,
                                        const char *name,
                                        bool in_target,
                                        struct IntcurCurrent **out);

// Copies map `name`.
//
// # Safety
// `doc` must be a live handle; `name` a nul-terminated string; `out` writable.
enum IntcurStatus intcur_document_map(const struct IntcurDocument *doc,
                                      const char *name,
                                      struct IntcurMap **out);

// Pushes `current` forward by `map` onto the document's target mesh.
//
// # Safety
// All handles must be live; `out` writable.
enum IntcurStatus intcur_pushforward(const struct IntcurDocument *doc,
                                     const struct IntcurMap *map,
                                     const struct IntcurCurrent *current,
                                     struct IntcurCurrent **out);

// # Safety
// `map` must be null or a handle not yet freed.
void intcur_map_free(struct IntcurMap *map);

// Dimension of the current.
//
// # Safety
// `current` must be a live handle; `out` writable.
enum IntcurStatus intcur_current_dim(const struct IntcurCurrent *current, uintptr_t *out);

// Number of simplices with nonzero multiplicity.
//
// # Safety
// `current` must be a live handle; `out` writable.
enum IntcurStatus intcur_current_support_size(const struct IntcurCurrent *current, uintptr_t *out);

// Mass: sum of |multiplicity| times simplex volume.
//
// # Safety
// `current` must be a live handle; `out` writable.
enum IntcurStatus intcur_current_mass(const struct IntcurCurrent *current, double *out);

// Boundary current.
//
// # Safety
// `current` must be a live handle; `out` writable.
enum IntcurStatus intcur_current_boundary(const struct IntcurCurrent *current,
                                          struct IntcurCurrent **out);

// Flat norm on the current's own complex.
//
// # Safety
// `current` must be a live handle; `out` writable.
enum IntcurStatus intcur_current_flat_norm(const struct IntcurCurrent *current, double *out);

// # Safety
// `current` must be null or a handle not yet freed.
void intcur_current_free(struct IntcurCurrent *current);

// Rigidity check of `map` on `current` against `ball`, all with the ambient metric.
// Writes the verdict and, if `report_json` is non-null, the full report as JSON.
//
// # Safety
// Handles must be live; `verdict` writable; `report_json` null or writable.
enum IntcurStatus intcur_rigidity_check(const struct IntcurCurrent *current,
                                        const struct IntcurMap *map,
                                        const struct IntcurCurrent *ball,
                                        uintptr_t samples,
                                        uint64_t seed,
                                        enum IntcurVerdict *verdict,
                                        char **report_json);

// Releases a string returned by this library.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void intcur_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INTCUR_H */
