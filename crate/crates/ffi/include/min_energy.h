#ifndef MIN_ENERGY_H
#define MIN_ENERGY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MeStatus {
  ME_STATUS_OK = 0,
  ME_STATUS_NULL_POINTER = 1,
  ME_STATUS_PARSE = 2,
  ME_STATUS_BAD_PARAMETER = 3,
  ME_STATUS_PRECONDITION = 4,
  ME_STATUS_UNREACHABLE = 5,
  ME_STATUS_DOMAIN = 6,
  ME_STATUS_PANIC = 7,
} MeStatus;

/**
 * Opaque model handle.
 */
typedef struct MeProblem MeProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a model from a JSON document (see the CLI `--model` format).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum MeStatus me_problem_from_json(const char *json, struct MeProblem **out);

/**
 * Builds a model from row-major `A` (`n×n`) and `B` (`n×m`).
 *
 * # Safety
 * `a` must hold `n*n` doubles, `b` `n*m` doubles; `out` must be writable.
 */
enum MeStatus me_problem_new_dense(size_t n,
                                   size_t m,
                                   const double *a,
                                   const double *b,
                                   struct MeProblem **out);

/**
 * Builds the diagonal model `A = diag(lambdas)`, `BB* = diag(b_diag)`.
 *
 * # Safety
 * `lambdas` and `b_diag` must hold `n` doubles; `out` must be writable.
 */
enum MeStatus me_problem_new_spectral(size_t n,
                                      const double *lambdas,
                                      const double *b_diag,
                                      struct MeProblem **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `p` must come from one of the constructors and not be used afterwards.
 */
void me_problem_free(struct MeProblem *p);

/**
 * State dimension `n` and control dimension `m`.
 *
 * # Safety
 * `p` must be a live handle; `n` and `m` must be writable.
 */
enum MeStatus me_problem_dims(const struct MeProblem *p, size_t *n, size_t *m);

/**
 * Writes `Q_∞` (`n×n`, row-major) into `q`.
 *
 * # Safety
 * `p` must be a live handle; `q` must hold `n*n` doubles.
 */
enum MeStatus me_gramian_infinite(const struct MeProblem *p, double *q);

/**
 * Writes `Q_t` (`n×n`, row-major) into `q`.
 *
 * # Safety
 * `p` must be a live handle; `q` must hold `n*n` doubles.
 */
enum MeStatus me_gramian_finite(const struct MeProblem *p, double t, double *q);

/**
 * Minimum energy `V(t, x)` to reach `x` in time `t`.
 *
 * # Safety
 * `p` must be a live handle; `x` must hold `n` doubles; `value` must be writable.
 */
enum MeStatus me_value_finite(const struct MeProblem *p, double t, const double *x, double *value);

/**
 * Minimum energy `V_∞(x)` to reach `x` from the infinite past.
 *
 * # Safety
 * `p` must be a live handle; `x` must hold `n` doubles; `value` must be writable.
 */
enum MeStatus me_value_infinite(const struct MeProblem *p, const double *x, double *value);

/**
 * Value with penalized free initial state `z`, penalty `½·n_scale·‖z‖²_H`,
 * and its minimizer (`n` doubles, may be null when not wanted).
 *
 * # Safety
 * `p` must be a live handle; `x` must hold `n` doubles; `value` must be
 * writable; `argmin_z`, when non-null, must hold `n` doubles.
 */
enum MeStatus me_value_auxiliary(const struct MeProblem *p,
                                 double t,
                                 double n_scale,
                                 const double *x,
                                 double *value,
                                 double *argmin_z);

/**
 * Riccati residuals of the canonical solutions `R = Q_∞^{-1}` (ambient form)
 * and `P = I` (reachable-space form).
 *
 * # Safety
 * `p` must be a live handle; both outputs must be writable.
 */
enum MeStatus me_verify_canonical(const struct MeProblem *p,
                                  double *x_form_residual,
                                  double *h_form_residual);

/**
 * Message for the last failed call on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *me_last_error(void);

/**
 * Library version, NUL-terminated, static.
 */
const char *me_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIN_ENERGY_H */
