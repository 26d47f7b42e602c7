#ifndef MDSAT_H
#define MDSAT_H

/* Generated by cbindgen. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum MdsatStatus {
  MDSAT_STATUS_OK = 0,
  MDSAT_STATUS_NULL_POINTER = 1,
  MDSAT_STATUS_INVALID_UTF8 = 2,
  MDSAT_STATUS_PARSE = 3,
  MDSAT_STATUS_INVALID_PARAMETER = 4,
  MDSAT_STATUS_CAP_EXCEEDED = 5,
  MDSAT_STATUS_UNSATISFIABLE = 6,
  MDSAT_STATUS_RESTARTS_EXHAUSTED = 7,
  MDSAT_STATUS_IO = 8,
  MDSAT_STATUS_INTERNAL = 9,
  MDSAT_STATUS_PANIC = 10,
} MdsatStatus;

/**
 * Opaque formula handle.
 */
typedef struct MdsatFormula MdsatFormula;

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call on the same thread.
 */
const char *mdsat_last_error(void);

/**
 * Library version as a static string.
 */
const char *mdsat_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void mdsat_string_free(char *s);

/**
 * Parses DIMACS CNF text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MdsatStatus mdsat_formula_parse_dimacs(const char *text, struct MdsatFormula **out);

/**
 * Generates an instance. `kind` is `random_ksat`, `planted_unique`,
 * `unate` or `unate_unique`.
 *
 * # Safety
 * `kind` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MdsatStatus mdsat_formula_generate(const char *kind,
                                        size_t n,
                                        size_t m,
                                        size_t k,
                                        uint64_t seed,
                                        struct MdsatFormula **out);

/**
 * # Safety
 * `f` must be null or a handle from this library not yet freed.
 */
void mdsat_formula_free(struct MdsatFormula *f);

/**
 * Variable count, or 0 for a null handle.
 *
 * # Safety
 * `f` must be null or a live handle.
 */
size_t mdsat_formula_num_vars(const struct MdsatFormula *f);

/**
 * Clause count, or 0 for a null handle.
 *
 * # Safety
 * `f` must be null or a live handle.
 */
size_t mdsat_formula_num_clauses(const struct MdsatFormula *f);

/**
 * DIMACS text of the formula.
 *
 * # Safety
 * `f` must be a live handle and `out` a valid pointer.
 */
enum MdsatStatus mdsat_formula_to_dimacs(const struct MdsatFormula *f, char **out);

/**
 * Evaluates a `0`/`1` assignment string, `x1` first.
 *
 * # Safety
 * `f` must be a live handle, `assignment` a NUL-terminated string and
 * `out` a valid pointer.
 */
enum MdsatStatus mdsat_formula_evaluate(const struct MdsatFormula *f,
                                        const char *assignment,
                                        bool *out);

/**
 * Exact solution count by enumeration.
 *
 * # Safety
 * `f` must be a live handle and `out` a valid pointer.
 */
enum MdsatStatus mdsat_formula_count_solutions(const struct MdsatFormula *f, uint64_t *out);

/**
 * Runs the solver and returns the JSON run report.
 *
 * `options_json` may be null or an object with any of `theta` (radians,
 * `"frac:x"` or `"unate"`, as a string), `delta`, `readout`, `mode`,
 * `plan`, `mu`, `max_restarts`, `budget`, `cubic_cycles`.
 *
 * # Safety
 * `f` must be a live handle, `options_json` null or a NUL-terminated
 * string, and `out_json` a valid pointer.
 */
enum MdsatStatus mdsat_solve(const struct MdsatFormula *f,
                             const char *options_json,
                             uint64_t seed,
                             char **out_json);

/**
 * Spectral diagnostics as a JSON array, one entry per grid angle.
 *
 * # Safety
 * `f` must be a live handle, `thetas` a NUL-terminated comma-separated
 * grid and `out_json` a valid pointer.
 */
enum MdsatStatus mdsat_spectral(const struct MdsatFormula *f,
                                const char *thetas,
                                bool uniform_gap,
                                char **out_json);

/**
 * Builds an `(n, k)` perfect hash family. The rows are returned as text,
 * one row per line; `out_verified` reports exhaustive verification.
 *
 * # Safety
 * `out_text` and `out_verified` must be valid pointers.
 */
enum MdsatStatus mdsat_phf(size_t n, size_t k, char **out_text, bool *out_verified);

#endif  /* MDSAT_H */
