#ifndef QPAUG_H
#define QPAUG_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. Zero is success.
typedef enum QpaugStatus {
  QPAUG_STATUS_OK = 0,
  QPAUG_STATUS_NULL_POINTER = 1,
  QPAUG_STATUS_INVALID_INPUT = 2,
  QPAUG_STATUS_DIMENSION = 3,
  QPAUG_STATUS_SOLUTION_REQUIRED = 4,
  QPAUG_STATUS_INFEASIBLE = 5,
  QPAUG_STATUS_UNBOUNDED = 6,
  QPAUG_STATUS_NOT_CONVERGED = 7,
  QPAUG_STATUS_NOT_CONVEX = 8,
  QPAUG_STATUS_BUFFER_TOO_SMALL = 9,
  QPAUG_STATUS_PANIC = 10,
  QPAUG_STATUS_OTHER = 11,
} QpaugStatus;

// Opaque instance handle.
typedef struct QpaugInstance QpaugInstance;

// Opaque primal/dual solution handle.
typedef struct QpaugSolution QpaugSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failing call on this thread, or null. Owned by the
// library and valid until the next failing call on this thread.
const char *qpaug_last_error(void);

// Parses an instance file's JSON text. `*out_sol` receives the stored
// solution or null; pass `out_sol = NULL` to ignore it.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum QpaugStatus qpaug_instance_from_json(const char *json,
                                          struct QpaugInstance **out,
                                          struct QpaugSolution **out_sol);

// Serializes an instance, with `sol` as its label when non-null. Release the
// string with [`qpaug_string_free`].
//
// # Safety
// Handles must come from this library; `out` must be writable.
enum QpaugStatus qpaug_instance_to_json(const struct QpaugInstance *inst,
                                        const struct QpaugSolution *sol,
                                        char **out);

// Random LP (`qp == 0`) or strictly convex QP with `m` rows, `n` variables
// and the given densities. `density_q` is ignored for LPs.
//
// # Safety
// `out` must be writable.
enum QpaugStatus qpaug_generate(int32_t qp,
                                uintptr_t m,
                                uintptr_t n,
                                double density_a,
                                double density_q,
                                uint64_t seed,
                                struct QpaugInstance **out);

// Writes the variable and constraint counts.
//
// # Safety
// `inst` must come from this library; `n` and `m` must be writable.
enum QpaugStatus qpaug_instance_dims(const struct QpaugInstance *inst, uintptr_t *n, uintptr_t *m);

// Solves with the splitting method. Non-positive `tol` or zero `max_iter`
// select the defaults.
//
// # Safety
// `inst` must come from this library; `out` must be writable.
enum QpaugStatus qpaug_solve(const struct QpaugInstance *inst,
                             double tol,
                             uintptr_t max_iter,
                             struct QpaugSolution **out);

// Largest KKT residual of `sol` (relative when `relative != 0`).
//
// # Safety
// Handles must come from this library; `out` must be writable.
enum QpaugStatus qpaug_kkt_max_residual(const struct QpaugInstance *inst,
                                        const struct QpaugSolution *sol,
                                        int32_t relative,
                                        double *out);

// Objective value of `sol`.
//
// # Safety
// `sol` must come from this library; `out` must be writable.
enum QpaugStatus qpaug_solution_objective(const struct QpaugSolution *sol, double *out);

// Copies the primal vector (length n) into `buf`.
//
// # Safety
// `buf` must hold `len` doubles.
enum QpaugStatus qpaug_solution_x(const struct QpaugSolution *sol, double *buf, uintptr_t len);

// Copies the multipliers (length m) into `buf`.
//
// # Safety
// `buf` must hold `len` doubles.
enum QpaugStatus qpaug_solution_lambda(const struct QpaugSolution *sol, double *buf, uintptr_t len);

// Applies the ops in `ops` (`name:strength,...`) with strengths used as
// given. `sol` may be null when every op is solution-independent.
// `*out_sol` receives the mapped solution or null.
//
// # Safety
// Handles must come from this library; `ops` must be NUL-terminated;
// `out` and `out_sol` must be writable.
enum QpaugStatus qpaug_augment(const struct QpaugInstance *inst,
                               const struct QpaugSolution *sol,
                               const char *ops,
                               uintptr_t ops_per_instance,
                               uint64_t seed,
                               struct QpaugInstance **out,
                               struct QpaugSolution **out_sol);

// # Safety
// `inst` must come from this library (or be null) and not be used after.
void qpaug_instance_free(struct QpaugInstance *inst);

// # Safety
// `sol` must come from this library (or be null) and not be used after.
void qpaug_solution_free(struct QpaugSolution *sol);

// # Safety
// `s` must come from [`qpaug_instance_to_json`] (or be null).
void qpaug_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QPAUG_H */
