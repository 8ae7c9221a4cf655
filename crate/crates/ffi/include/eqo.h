#ifndef EQO_H
#define EQO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  EQO_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  EQO_STATUS_NULL_POINTER = 1,
  /**
   * Malformed input: bad shape, asymmetric D1/D2, unknown catalog entry.
   */
  EQO_STATUS_INVALID_INPUT = 2,
  /**
   * The ordered form does not exist here (singular T22 and the like).
   */
  EQO_STATUS_DOMAIN = 3,
  /**
   * The caller's output buffer is shorter than required.
   */
  EQO_STATUS_BUFFER_TOO_SMALL = 4,
  /**
   * A panic was caught at the boundary. This is a bug.
   */
  EQO_STATUS_INTERNAL = 5,
} EqoStatus;

/**
 * Opaque factorization: `W`, `Y`, `Z` and the prefactor.
 */
typedef struct EqoFactorization EqoFactorization;

/**
 * Opaque generator `R = [[D1, F], [F^T, D2]]`.
 */
typedef struct EqoGenerator EqoGenerator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failing call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *eqo_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *eqo_version(void);

/**
 * Builds a generator from `n x n` blocks. `D1` and `D2` must be symmetric.
 *
 * # Safety
 * Each block must point to `2 n^2` doubles; `out` must be writable.
 */
EqoStatus eqo_generator_new(size_t n,
                            const double *d1,
                            const double *f,
                            const double *d2,
                            EqoGenerator **out);

/**
 * Builds a named catalog operator. `keys[i]` pairs with `values[i]`;
 * omitted parameters default to zero.
 *
 * # Safety
 * `name` and each `keys[i]` must be NUL-terminated; `keys` and `values`
 * must hold `count` elements (either may be null when `count` is 0).
 */
EqoStatus eqo_generator_catalog(const char *name,
                                const char *const *keys,
                                const double *values,
                                size_t count,
                                EqoGenerator **out);

/**
 * Number of modes, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t eqo_generator_modes(const EqoGenerator *g);

/**
 * # Safety
 * `g` must be null or a handle not yet freed.
 */
void eqo_generator_free(EqoGenerator *g);

/**
 * Writes `T = exp(R Sigma^-1)`, a `2n x 2n` matrix (`8 n^2` doubles).
 *
 * # Safety
 * `g` must be a live handle; `out` must hold `len` doubles.
 */
EqoStatus eqo_transfer_matrix(const EqoGenerator *g, double *out, size_t len);

/**
 * Runs the full pipeline. `EQO_STATUS_DOMAIN` when T22 is singular.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
EqoStatus eqo_decompose(const EqoGenerator *g, EqoFactorization **out);

/**
 * # Safety
 * `f` must be null or a live handle.
 */
size_t eqo_factorization_modes(const EqoFactorization *f);

/**
 * Writes `W` as `2 n^2` interleaved doubles.
 *
 * # Safety
 * `f` must be a live handle; `out` must hold `len` doubles.
 */
EqoStatus eqo_factorization_w(const EqoFactorization *f, double *out, size_t len);

/**
 * Writes `Y`. The principal logarithm is used, so `exp(-Y) = T22^T`.
 *
 * # Safety
 * `f` must be a live handle; `out` must hold `len` doubles.
 */
EqoStatus eqo_factorization_y(const EqoFactorization *f, double *out, size_t len);

/**
 * Writes `Z` as `2 n^2` interleaved doubles.
 *
 * # Safety
 * `f` must be a live handle; `out` must hold `len` doubles.
 */
EqoStatus eqo_factorization_z(const EqoFactorization *f, double *out, size_t len);

/**
 * Writes `exp(tr Y / 2)` as `out[0] + i out[1]`.
 *
 * # Safety
 * `f` must be a live handle; `out` must hold 2 doubles.
 */
EqoStatus eqo_factorization_prefactor(const EqoFactorization *f, double *out);

/**
 * Multiplies the factors back into `T` (`8 n^2` doubles).
 *
 * # Safety
 * `f` must be a live handle; `out` must hold `len` doubles.
 */
EqoStatus eqo_factorization_reconstruct(const EqoFactorization *f, double *out, size_t len);

/**
 * # Safety
 * `f` must be null or a handle not yet freed.
 */
void eqo_factorization_free(EqoFactorization *f);

/**
 * Distance between the factored action and the integrated Gaussian flow,
 * both applied to the vacuum, over `steps` Runge-Kutta steps.
 *
 * # Safety
 * `g` must be a live handle; `distance` must be writable.
 */
EqoStatus eqo_oracle_check(const EqoGenerator *g, size_t steps, double *distance);

/**
 * `|v(1) - prefactor|` from the v(t) integration; `consistent` is set when
 * it is below 1e-7.
 *
 * # Safety
 * `g` must be a live handle; `residual` and `consistent` must be writable.
 */
EqoStatus eqo_prefactor_check(const EqoGenerator *g,
                              size_t steps,
                              double *residual,
                              bool *consistent);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EQO_H */
