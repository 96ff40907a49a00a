#ifndef LIPGRAD_H
#define LIPGRAD_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum LipgradStatus {
  LIPGRAD_STATUS_OK = 0,
  LIPGRAD_STATUS_NULL_POINTER = 1,
  LIPGRAD_STATUS_INVALID_ARGUMENT = 2,
  LIPGRAD_STATUS_DOMAIN_VIOLATION = 3,
  LIPGRAD_STATUS_EVALUATION_FAILED = 4,
  LIPGRAD_STATUS_BUDGET_EXHAUSTED = 5,
  LIPGRAD_STATUS_GENERATION_FAILED = 6,
  LIPGRAD_STATUS_INTERNAL_ERROR = 7,
} LipgradStatus;

/**
 * Why a solver run ended.
 */
typedef enum LipgradStopReason {
  LIPGRAD_STOP_REASON_CONVERGED = 0,
  LIPGRAD_STOP_REASON_BUDGET_EXHAUSTED = 1,
  LIPGRAD_STOP_REASON_TARGET_REACHED = 2,
} LipgradStopReason;

/**
 * Opaque generated test function.
 */
typedef struct LipgradGkls LipgradGkls;

/**
 * Opaque run result.
 */
typedef struct LipgradRunResult LipgradRunResult;

/**
 * Solver parameters; obtain defaults from
 * [`lipgrad_solver_config_default`].
 */
typedef struct LipgradSolverConfig {
  /**
   * Reliability base, must exceed 1.
   */
  double r_bar;
  /**
   * Adaptive term: the parameter at iteration k is `r_bar + c / k`.
   */
  double c;
  /**
   * Floor for the adaptive constant estimate.
   */
  double xi;
  /**
   * Stopping tolerance relative to the root diagonal.
   */
  double eps;
  /**
   * Trial budget.
   */
  uint64_t max_trials;
} LipgradSolverConfig;

/**
 * Joint evaluation callback: write `f(x)` to `value_out` and, when
 * `grad_out` is non-null, the `n` gradient components to `grad_out`.
 * Return 0 on success; any other value aborts the run.
 */
typedef int32_t (*LipgradEvalFn)(const double *x,
                                 uintptr_t n,
                                 double *value_out,
                                 double *grad_out,
                                 void *user);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message (NUL-terminated) into
 * `buf` and returns the untruncated message length in bytes.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes, or be null (query mode).
 */
uintptr_t lipgrad_last_error(uint8_t *buf, uintptr_t cap);

/**
 * Default solver parameters.
 */
struct LipgradSolverConfig lipgrad_solver_config_default(void);

/**
 * Generates function `index` (1..=100) of standard class `class_id`
 * (1..=8) and returns an owned handle through `out`.
 *
 * # Safety
 * `out` must be a valid pointer. The handle must be released with
 * [`lipgrad_gkls_destroy`].
 */
enum LipgradStatus lipgrad_gkls_create(uint8_t class_id,
                                       uint32_t index,
                                       uint64_t seed,
                                       struct LipgradGkls **out);

/**
 * Releases a generated function handle. Null is a no-op.
 *
 * # Safety
 * `handle` must come from [`lipgrad_gkls_create`] and not be used again.
 */
void lipgrad_gkls_destroy(struct LipgradGkls *handle);

/**
 * Dimension of the generated function, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be valid or null.
 */
uintptr_t lipgrad_gkls_dimension(const struct LipgradGkls *handle);

/**
 * Evaluates the function at `x` (length `n`).
 *
 * # Safety
 * `x` must point to `n` doubles; `value_out` must be writable.
 */
enum LipgradStatus lipgrad_gkls_eval(const struct LipgradGkls *handle,
                                     const double *x,
                                     uintptr_t n,
                                     double *value_out);

/**
 * Writes the analytic gradient at `x` into `grad_out` (length `n`).
 *
 * # Safety
 * `x` and `grad_out` must point to `n` doubles each.
 */
enum LipgradStatus lipgrad_gkls_gradient(const struct LipgradGkls *handle,
                                         const double *x,
                                         uintptr_t n,
                                         double *grad_out);

/**
 * Writes the known global minimizer into `x_out` (length `n`) and its
 * value into `value_out` (which may be null).
 *
 * # Safety
 * `x_out` must point to `n` doubles; `n` must equal the dimension.
 */
enum LipgradStatus lipgrad_gkls_minimizer(const struct LipgradGkls *handle,
                                          double *x_out,
                                          uintptr_t n,
                                          double *value_out);

/**
 * Minimizes a caller-supplied objective over the box `[lower, upper]`.
 * On `BUDGET_EXHAUSTED` a result handle is still returned with the best
 * point found. `config` may be null for defaults.
 *
 * # Safety
 * `lower` and `upper` must point to `dimension` doubles; `evaluator` must
 * be callable with the documented contract for the duration of the call;
 * `out` must be writable. Release the handle with
 * [`lipgrad_result_destroy`].
 */
enum LipgradStatus lipgrad_solve(uintptr_t dimension,
                                 const double *lower,
                                 const double *upper,
                                 LipgradEvalFn evaluator,
                                 void *user,
                                 const struct LipgradSolverConfig *config,
                                 struct LipgradRunResult **out);

/**
 * Minimizes a generated test function with its analytic gradient.
 *
 * # Safety
 * `handle` must be a valid generated-function handle; `out` must be
 * writable. Release the result with [`lipgrad_result_destroy`].
 */
enum LipgradStatus lipgrad_solve_gkls(const struct LipgradGkls *handle,
                                      const struct LipgradSolverConfig *config,
                                      struct LipgradRunResult **out);

/**
 * Releases a run result. Null is a no-op.
 *
 * # Safety
 * `handle` must come from a solve call and not be used again.
 */
void lipgrad_result_destroy(struct LipgradRunResult *handle);

/**
 * Best objective value found.
 *
 * # Safety
 * `handle` must be valid.
 */
double lipgrad_result_best_value(const struct LipgradRunResult *handle);

/**
 * Total trials performed.
 *
 * # Safety
 * `handle` must be valid.
 */
uint64_t lipgrad_result_trials(const struct LipgradRunResult *handle);

/**
 * Iterations performed.
 *
 * # Safety
 * `handle` must be valid.
 */
uint64_t lipgrad_result_iterations(const struct LipgradRunResult *handle);

/**
 * Evaluations served from the shared vertex database.
 *
 * # Safety
 * `handle` must be valid.
 */
uint64_t lipgrad_result_reuse_hits(const struct LipgradRunResult *handle);

/**
 * Why the run stopped.
 *
 * # Safety
 * `handle` must be valid.
 */
enum LipgradStopReason lipgrad_result_stop_reason(const struct LipgradRunResult *handle);

/**
 * Copies the best point found into `x_out` (length `n`).
 *
 * # Safety
 * `x_out` must point to `n` doubles; `n` must equal the dimension.
 */
enum LipgradStatus lipgrad_result_best_point(const struct LipgradRunResult *handle,
                                             double *x_out,
                                             uintptr_t n);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIPGRAD_H */
