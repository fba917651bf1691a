#ifndef CURVEST_H
#define CURVEST_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes.
 */
typedef enum CurvestStatus {
  CURVEST_STATUS_OK = 0,
  CURVEST_STATUS_NULL_POINTER = 1,
  CURVEST_STATUS_INVALID_INPUT = 2,
  CURVEST_STATUS_NOT_IN_CONE = 3,
  CURVEST_STATUS_NUMERICAL = 4,
  CURVEST_STATUS_NOT_CONVERGED = 5,
  CURVEST_STATUS_NO_ROOT = 6,
  CURVEST_STATUS_IO = 7,
  CURVEST_STATUS_PANIC = 8,
} CurvestStatus;

/**
 * Geometry of the ambient space.
 */
typedef enum CurvestSignature {
  CURVEST_SIGNATURE_EUCLIDEAN = 0,
  CURVEST_SIGNATURE_MINKOWSKI = 1,
} CurvestSignature;

/**
 * A grid problem and, after [`curvest_solver_solve`], its solution.
 */
typedef struct CurvestSolver CurvestSolver;

/**
 * Rows and thresholds of a finished sweep.
 */
typedef struct CurvestSweep CurvestSweep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t curvest_last_error(char *buf, size_t len);

/**
 * `sigma_k` of `kappa[0..n]`.
 *
 * # Safety
 * `kappa` must point to `n` doubles and `out` to one writable double.
 */
enum CurvestStatus curvest_sigma(const double *kappa, size_t n, int64_t k, double *out);

/**
 * Whether `kappa` lies in the open cone `Gamma_k` (1 or 0), and its
 * scale-free margin `min_m sigma_m / |kappa|^m` over `m <= k`.
 *
 * # Safety
 * `kappa` must point to `n` doubles; `inside` and `margin` must be writable.
 */
enum CurvestStatus curvest_gamma_margin(const double *kappa,
                                        size_t n,
                                        size_t k,
                                        int32_t *inside,
                                        double *margin);

/**
 * Principal curvatures (descending) of the graph of `u` with gradient
 * `du[0..n]` and row-major Hessian `d2u[0..n*n]`, written to `kappa_out[0..n]`.
 *
 * # Safety
 * `du`, `d2u` and `kappa_out` must hold `n`, `n*n` and `n` doubles.
 */
enum CurvestStatus curvest_curvatures(const double *du,
                                      const double *d2u,
                                      size_t n,
                                      enum CurvestSignature signature,
                                      double *kappa_out);

/**
 * Radius of the sphere solving `sigma_k(1/r, ..., 1/r) = coef * r^exponent`
 * on `[r1, r2]`; `degenerate` is set to 1 when every radius solves it.
 *
 * # Safety
 * `r_out` and `degenerate` must be writable.
 */
enum CurvestStatus curvest_sphere_solve(double coef,
                                        double exponent,
                                        double r1,
                                        double r2,
                                        size_t n,
                                        size_t k,
                                        double *r_out,
                                        int32_t *degenerate);

/**
 * Runs the sweep `name` (identities, prop21, determinants, schur, ratio,
 * guan, divided_difference, combination, lemmas, counterexample, curvature)
 * with default parameters over `dims[0..ndims]`.
 *
 * # Safety
 * `name` must be a NUL-terminated string, `dims` must hold `ndims` values
 * and `out` must be writable. Free the handle with [`curvest_sweep_free`].
 */
enum CurvestStatus curvest_sweep_run(const char *name,
                                     uint64_t seed,
                                     size_t samples,
                                     const size_t *dims,
                                     size_t ndims,
                                     struct CurvestSweep **out);

/**
 * Number of rows and of failed checks.
 *
 * # Safety
 * `sweep` must come from [`curvest_sweep_run`]; the out pointers must be writable.
 */
enum CurvestStatus curvest_sweep_counts(const struct CurvestSweep *sweep,
                                        size_t *rows,
                                        size_t *violations);

/**
 * Writes the rows as CSV to `path`.
 *
 * # Safety
 * `sweep` must come from [`curvest_sweep_run`] and `path` must be a
 * NUL-terminated string.
 */
enum CurvestStatus curvest_sweep_write_csv(const struct CurvestSweep *sweep, const char *path);

/**
 * Releases a sweep handle; null is ignored.
 *
 * # Safety
 * `sweep` must be null or come from [`curvest_sweep_run`] and not be used again.
 */
void curvest_sweep_free(struct CurvestSweep *sweep);

/**
 * Builds a solver from a JSON problem description.
 *
 * # Safety
 * `problem_json` must be a NUL-terminated string and `out` writable. Free
 * the handle with [`curvest_solver_free`].
 */
enum CurvestStatus curvest_solver_new(const char *problem_json, struct CurvestSolver **out);

/**
 * Number of grid nodes (boundary included).
 *
 * # Safety
 * `solver` must come from [`curvest_solver_new`]; `len` must be writable.
 */
enum CurvestStatus curvest_solver_len(const struct CurvestSolver *solver, size_t *len);

/**
 * Solves by continuation with `t_steps` steps (0 picks the default) and
 * writes the final residual norm.
 *
 * # Safety
 * `solver` must come from [`curvest_solver_new`]; `residual` must be writable.
 */
enum CurvestStatus curvest_solver_solve(struct CurvestSolver *solver,
                                        size_t t_steps,
                                        double tol,
                                        double *residual);

/**
 * Copies the solution (row-major, axis 0 slowest) and the node coordinates
 * (`len * n` values, may be null) into caller buffers of `len` nodes.
 *
 * # Safety
 * `solver` must come from [`curvest_solver_new`]; `values` must hold `len`
 * doubles and `points`, if not null, `len * n` doubles.
 */
enum CurvestStatus curvest_solver_values(const struct CurvestSolver *solver,
                                         double *values,
                                         double *points,
                                         size_t len);

/**
 * Releases a solver handle; null is ignored.
 *
 * # Safety
 * `solver` must be null or come from [`curvest_solver_new`] and not be used again.
 */
void curvest_solver_free(struct CurvestSolver *solver);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CURVEST_H */
