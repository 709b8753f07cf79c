/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef ZETA_H
#define ZETA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ZetaStatus {
  ZETA_STATUS_OK = 0,
  ZETA_STATUS_NULL_POINTER = 1,
  ZETA_STATUS_INVALID_UTF8 = 2,
  // Malformed literal, formula or argument.
  ZETA_STATUS_USAGE = 3,
  // An enumeration or elimination budget was exceeded.
  ZETA_STATUS_BUDGET = 4,
  // The computation failed, e.g. a divergent sum or a failed verification.
  ZETA_STATUS_FAILED = 5,
  // The requested value does not exist, e.g. no convergence bound.
  ZETA_STATUS_ABSENT = 6,
  ZETA_STATUS_PANIC = 7,
} ZetaStatus;

// A group family such as `heisenberg` or `chevalley:A2`.
typedef struct ZetaFamily ZetaFamily;

// A ring such as `zq:p=2,f=1,m=3`.
typedef struct ZetaRing ZetaRing;

// A summed Presburger generating function.
typedef struct ZetaSum ZetaSum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after success.
// The pointer stays valid until the next call on the same thread.
const char *zeta_last_error(void);

// # Safety
// `s` is null or was returned by this library and not yet freed.
void zeta_string_free(char *s);

// # Safety
// `literal` is a NUL-terminated string and `out` is writable.
enum ZetaStatus zeta_ring_parse(const char *literal, struct ZetaRing **out);

// Residue field size, or 0 for a null handle.
//
// # Safety
// `ring` is null or a live handle.
uint64_t zeta_ring_q(const struct ZetaRing *ring);

// Level `m` of `o/p^m`, or 0 for a null handle.
//
// # Safety
// `ring` is null or a live handle.
uint32_t zeta_ring_level(const struct ZetaRing *ring);

// # Safety
// `ring` is null or a live handle, freed at most once.
void zeta_ring_free(struct ZetaRing *ring);

// # Safety
// `literal` is a NUL-terminated string and `out` is writable.
enum ZetaStatus zeta_family_parse(const char *literal, struct ZetaFamily **out);

// # Safety
// `family` is null or a live handle, freed at most once.
void zeta_family_free(struct ZetaFamily *family);

// Order and number of conjugacy classes of `family` over `ring`.
// `cap` bounds the enumeration; 0 selects the default.
//
// # Safety
// Handles are live; `order` and `classes` are writable.
enum ZetaStatus zeta_class_count(const struct ZetaFamily *family,
                                 const struct ZetaRing *ring,
                                 size_t cap,
                                 uint64_t *order,
                                 uint64_t *classes);

// Sums `weight` (`q^(...)`) over the solutions of `formula`.
//
// # Safety
// Strings are NUL-terminated and `out` is writable.
enum ZetaStatus zeta_presburger_sum(const char *weight, const char *formula, struct ZetaSum **out);

// Numerator `P` in `X = q` and `Y = q^{-s}`.
//
// # Safety
// `sum` is a live handle and `out` is writable.
enum ZetaStatus zeta_sum_numerator(const struct ZetaSum *sum, char **out);

// Denominator `Q` as a product of `(1 - X^a Y^b)` factors.
//
// # Safety
// `sum` is a live handle and `out` is writable.
enum ZetaStatus zeta_sum_denominator(const struct ZetaSum *sum, char **out);

// Smallest integer `s` of guaranteed convergence; `Absent` when the sum
// converges for every `s`.
//
// # Safety
// `sum` is a live handle and `out` is writable.
enum ZetaStatus zeta_sum_sigma0(const struct ZetaSum *sum, int64_t *out);

// The first `depth` coefficients at `q` as a JSON array of decimal strings.
//
// # Safety
// `sum` is a live handle and `out` is writable.
enum ZetaStatus zeta_sum_expand_json(const struct ZetaSum *sum,
                                     uint64_t q,
                                     size_t depth,
                                     char **out);

// # Safety
// `sum` is null or a live handle, freed at most once.
void zeta_sum_free(struct ZetaSum *sum);

// Runs the command line with `argv[0..argc]` (no program name) and returns
// its JSON report in `out` and its exit code in `exit_code`. The status is
// `Ok` whenever the command ran, whatever its exit code.
//
// # Safety
// `argv` holds `argc` NUL-terminated strings; `out` and `exit_code` are writable.
enum ZetaStatus zeta_run(const char *const *argv, size_t argc, char **out, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZETA_H */
