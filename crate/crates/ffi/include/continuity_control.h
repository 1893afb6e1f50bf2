#ifndef CONTINUITY_CONTROL_H
#define CONTINUITY_CONTROL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Characteristic integrator selector.
 */
typedef enum CcIntegrator {
  CC_INTEGRATOR_EULER = 0,
  CC_INTEGRATOR_HEUN = 1,
} CcIntegrator;

/**
 * Result code of every call.
 */
typedef enum CcStatus {
  CC_STATUS_OK = 0,
  CC_STATUS_NULL_POINTER = 1,
  CC_STATUS_INVALID_ARGUMENT = 2,
  CC_STATUS_CONFIG = 3,
  CC_STATUS_NUMERIC = 4,
  CC_STATUS_BUFFER_TOO_SMALL = 5,
  CC_STATUS_IO = 6,
  CC_STATUS_PANIC = 7,
} CcStatus;

/**
 * Opaque problem handle.
 */
typedef struct CcProblem CcProblem;

/**
 * Opaque solver result handle.
 */
typedef struct CcSolution CcSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread (empty if none). The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *cc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cc_version(void);

/**
 * Built-in benchmark `name` ("boat", "pendulum" or "sheep") with default parameters.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CcStatus cc_problem_from_benchmark(const char *name, struct CcProblem **out);

/**
 * Problem from the text of a TOML configuration.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CcStatus cc_problem_from_config(const char *text, struct CcProblem **out);

/**
 * # Safety
 * `problem` must come from a `cc_problem_from_*` call and not be used afterwards.
 */
void cc_problem_free(struct CcProblem *problem);

/**
 * Change the time grid and the number of boundary points.
 *
 * # Safety
 * `problem` must be a live handle.
 */
enum CcStatus cc_problem_set_discretization(struct CcProblem *problem,
                                            size_t n_time_steps,
                                            size_t n_boundary_pts);

/**
 * # Safety
 * `problem` must be a live handle.
 */
enum CcStatus cc_problem_set_integrator(struct CcProblem *problem, enum CcIntegrator integrator);

/**
 * # Safety
 * `problem` must be a live handle; the out pointers may be null to skip a value.
 */
enum CcStatus cc_problem_dimensions(const struct CcProblem *problem,
                                    size_t *n_time_steps,
                                    size_t *control_dim,
                                    double *horizon);

/**
 * Cost of a control given as a row-major `n_time_steps x control_dim` array.
 *
 * # Safety
 * `problem` must be a live handle, `controls` must hold `len` doubles and `cost` must
 * be a valid pointer.
 */
enum CcStatus cc_evaluate_cost(const struct CcProblem *problem,
                               const double *controls,
                               size_t len,
                               double *cost);

/**
 * Monte-Carlo estimate of the cost of a control.
 *
 * # Safety
 * As for [`cc_evaluate_cost`]; `value` and `std_error` must be valid pointers.
 */
enum CcStatus cc_mc_cost(const struct CcProblem *problem,
                         const double *controls,
                         size_t len,
                         size_t n_samples,
                         uint64_t seed,
                         double *value,
                         double *std_error);

/**
 * Run the solver from the default initial control. `tol_g <= 0` selects the default
 * relative residual tolerance; a positive value is an absolute tolerance.
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer.
 */
enum CcStatus cc_solve(const struct CcProblem *problem,
                       size_t max_iters,
                       double tol_g,
                       struct CcSolution **out);

/**
 * # Safety
 * `solution` must come from [`cc_solve`] and not be used afterwards.
 */
void cc_solution_free(struct CcSolution *solution);

/**
 * Final cost, final residual and the number of iterations run.
 *
 * # Safety
 * `solution` must be a live handle; the out pointers may be null to skip a value.
 */
enum CcStatus cc_solution_summary(const struct CcSolution *solution,
                                  double *cost,
                                  double *residual,
                                  size_t *iterations);

/**
 * Copy the cost sequence (initial cost first) into `out`. `written` receives the
 * required length even when the buffer is too small.
 *
 * # Safety
 * `solution` must be a live handle; `out` must hold `capacity` doubles.
 */
enum CcStatus cc_solution_cost_history(const struct CcSolution *solution,
                                       double *out,
                                       size_t capacity,
                                       size_t *written);

/**
 * Copy the final control, row-major, into `out`.
 *
 * # Safety
 * As for [`cc_solution_cost_history`].
 */
enum CcStatus cc_solution_control(const struct CcSolution *solution,
                                  double *out,
                                  size_t capacity,
                                  size_t *written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONTINUITY_CONTROL_H */
