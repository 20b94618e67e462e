#ifndef BRUHAT_CONTROL_H
#define BRUHAT_CONTROL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BcStatus {
  BC_STATUS_OK = 0,
  BC_STATUS_NULL_POINTER = 1,
  BC_STATUS_INVALID_UTF8 = 2,
  BC_STATUS_PARSE = 3,
  BC_STATUS_INVALID_INPUT = 4,
  BC_STATUS_PRECISION_EXHAUSTED = 5,
  BC_STATUS_NO_UNIQUE_SINK = 6,
  BC_STATUS_CAP_EXCEEDED = 7,
  BC_STATUS_PANIC = 8,
} BcStatus;

/**
 * Result of a control-set analysis.
 */
typedef struct BcAnalysis BcAnalysis;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Runs a control-set analysis of the JSON spec
 * `{p, precision, group, generators, max_word_len}`.
 *
 * # Safety
 * `spec_json` must be a nul-terminated string and `out` a valid pointer.
 */
enum BcStatus bc_analysis_new(const char *spec_json, uint64_t seed, struct BcAnalysis **out);

/**
 * # Safety
 * `a` must come from [`bc_analysis_new`] and not be used afterwards.
 */
void bc_analysis_free(struct BcAnalysis *a);

/**
 * # Safety
 * `a` must be a live analysis and `out` a valid pointer.
 */
enum BcStatus bc_analysis_control_set_count(const struct BcAnalysis *a, size_t *out);

/**
 * Order of `W(S)`; 0 when the semigroup has no regular hyperbolic element.
 *
 * # Safety
 * `a` must be a live analysis and `out` a valid pointer.
 */
enum BcStatus bc_analysis_weyl_subgroup_order(const struct BcAnalysis *a, size_t *out);

/**
 * Whether every structural verdict passed.
 *
 * # Safety
 * `a` must be a live analysis and `out` a valid pointer.
 */
enum BcStatus bc_analysis_consistent(const struct BcAnalysis *a, bool *out);

/**
 * # Safety
 * `a` must be a live analysis and `out` a valid pointer.
 */
enum BcStatus bc_analysis_report_json(const struct BcAnalysis *a, char **out);

/**
 * # Safety
 * `a` must be a live analysis and `out` a valid pointer.
 */
enum BcStatus bc_analysis_dot(const struct BcAnalysis *a, char **out);

/**
 * JSON `{valuation, digits, text}` of `num/den` in `Q_p` at `precision`
 * digits.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum BcStatus bc_padic_from_rational(uint64_t p,
                                     uint32_t precision,
                                     int64_t num,
                                     int64_t den,
                                     char **out);

/**
 * JSON classification of a 2x2 matrix acting on the Bruhat-Tits tree.
 *
 * # Safety
 * `matrix_json` must be a nul-terminated string and `out` a valid pointer.
 */
enum BcStatus bc_tree_classify(uint64_t p, const char *matrix_json, char **out);

/**
 * # Safety
 * `s` must come from this library, or be null.
 */
void bc_string_free(char *s);

/**
 * Message of the last failure on this thread. The pointer stays valid until
 * the next failing call on the same thread.
 */
const char *bc_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BRUHAT_CONTROL_H */
