#ifndef MSLAB_H
#define MSLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum MslabStatus {
  MSLAB_STATUS_OK = 0,
  MSLAB_STATUS_NULL_POINTER = 1,
  MSLAB_STATUS_INVALID_ARGUMENT = 2,
  MSLAB_STATUS_UNKNOWN = 3,
  MSLAB_STATUS_PARSE = 4,
  MSLAB_STATUS_DIVERGENT = 5,
  MSLAB_STATUS_NON_CONVERGENCE = 6,
  MSLAB_STATUS_UNSUPPORTED_DIMENSION = 7,
  MSLAB_STATUS_UNDEFINED_RATIO = 8,
  MSLAB_STATUS_IO = 9,
  MSLAB_STATUS_INTERNAL = 10,
} MslabStatus;

/**
 * Opaque test function u.
 */
typedef struct MslabFunction MslabFunction;

/**
 * Opaque kernel family ρ_ε.
 */
typedef struct MslabKernel MslabKernel;

/**
 * Energy split at one (ε, R). `ms_ratio` is NaN when ‖u‖ₚ = 0.
 */
typedef struct MslabEnergySplit {
  double far;
  double near;
  double total;
  double ms_ratio;
  double error_estimate;
} MslabEnergySplit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into this library from the same thread.
 */
const char *mslab_last_error(void);

/**
 * Static name of a status code.
 */
const char *mslab_status_name(enum MslabStatus status);

const char *mslab_version(void);

/**
 * Kernel family by name in dimension `n`. Pass NaN for `s` when the family
 * does not need it (only `concentrating` does).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MslabStatus mslab_kernel_new(const char *name,
                                  size_t n,
                                  double p,
                                  double s,
                                  struct MslabKernel **out);

/**
 * Kernel family from a JSON spec such as `{"name": "shifted-bump", "drift_scale": 10, "drift_power": 0}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MslabStatus mslab_kernel_from_json(const char *json,
                                        size_t n,
                                        double p,
                                        double s,
                                        struct MslabKernel **out);

/**
 * # Safety
 * `k` must come from `mslab_kernel_new` or `mslab_kernel_from_json` and not
 * have been freed; NULL is ignored.
 */
void mslab_kernel_free(struct MslabKernel *k);

/**
 * Test function by name with default parameters.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MslabStatus mslab_function_new(const char *name, size_t n, struct MslabFunction **out);

/**
 * Test function from a JSON spec such as `{"name": "bump", "radius": 2}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MslabStatus mslab_function_from_json(const char *json, size_t n, struct MslabFunction **out);

/**
 * # Safety
 * `u` must come from `mslab_function_new` or `mslab_function_from_json` and
 * not have been freed; NULL is ignored.
 */
void mslab_function_free(struct MslabFunction *u);

/**
 * Kernel mass outside the ball of radius `radius`.
 *
 * # Safety
 * `k` must be a live kernel handle and `out` a valid pointer.
 */
enum MslabStatus mslab_tail_mass(const struct MslabKernel *k,
                                 double eps,
                                 double radius,
                                 double *out);

/**
 * q-th moment of the kernel inside the ball of radius `radius`.
 *
 * # Safety
 * `k` must be a live kernel handle and `out` a valid pointer.
 */
enum MslabStatus mslab_short_range_moment(const struct MslabKernel *k,
                                          double eps,
                                          double radius,
                                          double q,
                                          double *out);

/**
 * ∫ρ_ε(z)·min(1, |z|^{sp}) dz.
 *
 * # Safety
 * `k` must be a live kernel handle and `out` a valid pointer.
 */
enum MslabStatus mslab_admissibility(const struct MslabKernel *k,
                                     double eps,
                                     double s,
                                     double p,
                                     double *out);

/**
 * Energy of `u` under ρ_ε split at |z| = `radius`.
 *
 * # Safety
 * `k` and `u` must be live handles and `out` a valid pointer.
 */
enum MslabStatus mslab_energy_split(const struct MslabKernel *k,
                                    const struct MslabFunction *u,
                                    double eps,
                                    double p,
                                    double radius,
                                    struct MslabEnergySplit *out);

/**
 * Gagliardo seminorm [u]ᵖ_{W^{s,p}} and its error estimate; `error` may be NULL.
 *
 * # Safety
 * `u` must be a live handle, `out` a valid pointer, `error` valid or NULL.
 */
enum MslabStatus mslab_seminorm(const struct MslabFunction *u,
                                double s,
                                double p,
                                double *out,
                                double *error);

/**
 * Runs a full study from a JSON config and returns the JSON report in
 * `*report` (release it with `mslab_string_free`). `*agree` receives 1 when
 * the verdicts and the energy limits agree, 0 otherwise; it may be NULL.
 *
 * # Safety
 * `config` must be a NUL-terminated string, `report` a valid pointer and
 * `agree` valid or NULL.
 */
enum MslabStatus mslab_run_study(const char *config, char **report, int32_t *agree);

/**
 * # Safety
 * `s` must come from this library and not have been freed; NULL is ignored.
 */
void mslab_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MSLAB_H */
