#ifndef INFLUENCE_H
#define INFLUENCE_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum InflStatus {
  INFL_STATUS_OK = 0,
  INFL_STATUS_NULL_POINTER = 1,
  /**
   * Bad input: syntax, validation, shape or domain error.
   */
  INFL_STATUS_INVALID_INPUT = 2,
  /**
   * Numerical failure: infeasible row, degenerate ranking, no convergence.
   */
  INFL_STATUS_NUMERICAL = 3,
  INFL_STATUS_INVALID_UTF8 = 4,
  INFL_STATUS_PANIC = 5,
} InflStatus;

typedef enum InflTraceFormat {
  INFL_TRACE_FORMAT_TABLE = 0,
  INFL_TRACE_FORMAT_STRUCTURED = 1,
} InflTraceFormat;

typedef enum InflBranch {
  INFL_BRANCH_ONE_ZERO = 0,
  INFL_BRANCH_EQUAL = 1,
  INFL_BRANCH_RATIO = 2,
} InflBranch;

/**
 * Opaque validated scenario.
 */
typedef struct InflScenario InflScenario;

/**
 * Opaque simulation trace.
 */
typedef struct InflTrace InflTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the next call.
 */
const char *infl_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library that has not been freed.
 */
void infl_string_free(char *s);

/**
 * Parses and validates a scenario document.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be valid for one pointer write.
 */
enum InflStatus infl_scenario_parse(const char *text, struct InflScenario **out);

/**
 * # Safety
 * `s` must be NULL or a handle from [`infl_scenario_parse`] that has not been freed.
 */
void infl_scenario_free(struct InflScenario *s);

/**
 * Number of subsystems, or 0 for NULL.
 *
 * # Safety
 * `s` must be NULL or a live scenario handle.
 */
size_t infl_scenario_size(const struct InflScenario *s);

/**
 * Default horizon stored in the scenario, or 0 for NULL.
 *
 * # Safety
 * `s` must be NULL or a live scenario handle.
 */
size_t infl_scenario_horizon(const struct InflScenario *s);

/**
 * Runs `horizon` steps; 0 uses the scenario's own horizon.
 *
 * # Safety
 * `s` must be a live scenario handle; `out` must be valid for one pointer write.
 */
enum InflStatus infl_simulate(const struct InflScenario *s, size_t horizon, struct InflTrace **out);

/**
 * # Safety
 * `t` must be NULL or a handle from [`infl_simulate`] that has not been freed.
 */
void infl_trace_free(struct InflTrace *t);

/**
 * # Safety
 * `t` must be NULL or a live trace handle.
 */
size_t infl_trace_len(const struct InflTrace *t);

/**
 * # Safety
 * `t` must be NULL or a live trace handle.
 */
size_t infl_trace_dim(const struct InflTrace *t);

/**
 * Copies step `k`: its timestamp, `n` performance values and the `n*n` row-major strengths.
 * Any output pointer may be NULL to skip it.
 *
 * # Safety
 * `t` must be a live trace handle; non-NULL outputs must hold 1, `n` and `n*n` values.
 */
enum InflStatus infl_trace_step(const struct InflTrace *t,
                                size_t k,
                                int64_t *t_out,
                                double *w_out,
                                double *r_out);

/**
 * Serializes the trace; free the result with [`infl_string_free`].
 *
 * # Safety
 * `t` must be a live trace handle; `out` must be valid for one pointer write.
 */
enum InflStatus infl_trace_write(const struct InflTrace *t,
                                 enum InflTraceFormat format,
                                 char **out);

/**
 * `w_out[i] = Σ_j r[i*n+j] * u[i*n+j]`.
 *
 * # Safety
 * `r` and `u` must hold `n*n` values, `w_out` must hold `n`.
 */
enum InflStatus infl_compute_weights(const double *r, const double *u, size_t n, double *w_out);

/**
 * One relationship-strength update. `branch_out` may be NULL.
 *
 * # Safety
 * `value_out` must be valid for a write; `branch_out` NULL or valid for a write.
 */
enum InflStatus infl_update_relationship(double dw_i,
                                         double dw_j,
                                         double r_prev,
                                         bool clamp,
                                         double eps_delta,
                                         double *value_out,
                                         enum InflBranch *branch_out);

/**
 * Minimum-norm utility weights reproducing `w` from `r`; writes `n*n` values to `u_out`.
 *
 * # Safety
 * `r` and `u_out` must hold `n*n` values, `w` must hold `n`.
 */
enum InflStatus infl_solve_utility(const double *r, const double *w, size_t n, double *u_out);

/**
 * Quality coefficient `mean(w) / ihdi`.
 *
 * # Safety
 * `w` must hold `n` values; `qc_out` must be valid for a write.
 */
enum InflStatus infl_quality_coefficient(const double *w, size_t n, double ihdi, double *qc_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INFLUENCE_H */
