#ifndef BISIS_H
#define BISIS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum BisisStatus {
  BISIS_STATUS_OK = 0,
  BISIS_STATUS_NULL_POINTER = 1,
  BISIS_STATUS_INVALID_ARGUMENT = 2,
  BISIS_STATUS_IO = 3,
  BISIS_STATUS_PARSE = 4,
  /**
   * Empty, disconnected or self-looped input.
   */
  BISIS_STATUS_INVALID_GRAPH = 5,
  BISIS_STATUS_NON_CONVERGENCE = 6,
  /**
   * A requested budget differs from the critical one, or cannot be spent.
   */
  BISIS_STATUS_INFEASIBLE_BUDGET = 7,
  /**
   * Degenerate eigenvalues, or a state the model cannot handle.
   */
  BISIS_STATUS_NUMERICAL = 8,
  BISIS_STATUS_PANIC = 99,
} BisisStatus;

/**
 * Opaque graph handle.
 */
typedef struct BisisGraph BisisGraph;

/**
 * Opaque community plan: the participation vector `u`, the scale `gamma`,
 * the node costs and the entrant's survival margin.
 */
typedef struct BisisPlan BisisPlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *bisis_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bisis_version(void);

/**
 * Builds a graph on `n` nodes from `m` undirected edges `(src[k], dst[k])`.
 * Duplicate edges are merged; self-loops and disconnected input are errors.
 *
 * # Safety
 * `src` and `dst` must point to `m` readable values; `out` must be writable.
 */
enum BisisStatus bisis_graph_from_edges(uintptr_t n,
                                        const uint32_t *src,
                                        const uint32_t *dst,
                                        uintptr_t m,
                                        struct BisisGraph **out);

/**
 * Loads a whitespace-separated edge list (base detected automatically).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum BisisStatus bisis_graph_load(const char *path, struct BisisGraph **out);

/**
 * Releases a graph. Null is ignored.
 *
 * # Safety
 * `g` must come from this library and not be used afterwards.
 */
void bisis_graph_free(struct BisisGraph *g);

/**
 * Node count, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live graph handle.
 */
uintptr_t bisis_graph_node_count(const struct BisisGraph *g);

/**
 * Undirected edge count, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live graph handle.
 */
uintptr_t bisis_graph_edge_count(const struct BisisGraph *g);

/**
 * Incumbent equilibrium of the single-product SIS model with strength `tau`.
 *
 * # Safety
 * `g` must be a live handle; `x_out` must hold `len` writable values.
 */
enum BisisStatus bisis_sis_fixed_point(const struct BisisGraph *g,
                                       double tau,
                                       double *x_out,
                                       uintptr_t len);

/**
 * Perron-Frobenius pair of `diag(scale) A`. `vector_out` may be null.
 *
 * # Safety
 * `scale` must hold `len` readable values, `vector_out` (if non-null) `len`
 * writable ones; `lambda_out` must be writable.
 */
enum BisisStatus bisis_pf_eigenpair(const struct BisisGraph *g,
                                    const double *scale,
                                    uintptr_t len,
                                    double *lambda_out,
                                    double *vector_out);

/**
 * Box-constrained budget-neutral LP: maximise `nu . alpha` subject to
 * `w . alpha = 0` and `|alpha_i| <= epsilon`.
 *
 * # Safety
 * `nu` and `w` must hold `len` readable values and `alpha_out` `len`
 * writable ones; `objective_out` may be null.
 */
enum BisisStatus bisis_solve_lp(const double *nu,
                                const double *w,
                                uintptr_t len,
                                double epsilon,
                                double *alpha_out,
                                double *objective_out);

/**
 * Critical community against the incumbent equilibrium `x_star`, with the
 * largest participation probability set to `u_max`.
 *
 * # Safety
 * `x_star` and `w` must hold `len` readable values; `out` must be writable.
 */
enum BisisStatus bisis_critical_plan(const struct BisisGraph *g,
                                     const double *x_star,
                                     const double *w,
                                     uintptr_t len,
                                     double tau2,
                                     double u_max,
                                     struct BisisPlan **out);

/**
 * Critical community followed by one local-search step of size `epsilon`
 * (per-node clamping, `u_max` 0.5).
 *
 * # Safety
 * `w` must hold `len` readable values; `out` must be writable.
 */
enum BisisStatus bisis_local_search(const struct BisisGraph *g,
                                    double tau1,
                                    double tau2,
                                    const double *w,
                                    uintptr_t len,
                                    double epsilon,
                                    struct BisisPlan **out);

/**
 * Builds a plan from explicit `gamma`, `u` and costs `w`, with its survival
 * margin against the incumbent equilibrium at `tau1`.
 *
 * # Safety
 * `u` and `w` must hold `len` readable values; `out` must be writable.
 */
enum BisisStatus bisis_plan_new(const struct BisisGraph *g,
                                double tau1,
                                double tau2,
                                double gamma,
                                const double *u,
                                const double *w,
                                uintptr_t len,
                                struct BisisPlan **out);

/**
 * Releases a plan. Null is ignored.
 *
 * # Safety
 * `p` must come from this library and not be used afterwards.
 */
void bisis_plan_free(struct BisisPlan *p);

/**
 * Node count of the plan, or 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live plan handle.
 */
uintptr_t bisis_plan_len(const struct BisisPlan *p);

/**
 * `gamma`, or NaN for a null handle.
 *
 * # Safety
 * `p` must be null or a live plan handle.
 */
double bisis_plan_gamma(const struct BisisPlan *p);

/**
 * Budget spent, `sqrt(gamma) * sum w_i u_i`, or NaN for a null handle.
 *
 * # Safety
 * `p` must be null or a live plan handle.
 */
double bisis_plan_budget(const struct BisisPlan *p);

/**
 * Survival margin `tau2 lambda - 1`, or NaN for a null handle.
 *
 * # Safety
 * `p` must be null or a live plan handle.
 */
double bisis_plan_margin(const struct BisisPlan *p);

/**
 * Copies `u` into `u_out`.
 *
 * # Safety
 * `p` must be a live plan handle; `u_out` must hold `len` writable values.
 */
enum BisisStatus bisis_plan_u(const struct BisisPlan *p, double *u_out, uintptr_t len);

/**
 * Coupled equilibrium reached from `(x*, y0)` under `plan` (null for no
 * community term). Writes both shares.
 *
 * # Safety
 * `g` must be a live handle, `plan` null or live; `x_out` and `y_out` must
 * hold `len` writable values.
 */
enum BisisStatus bisis_equilibrium(const struct BisisGraph *g,
                                   double tau1,
                                   double tau2,
                                   const struct BisisPlan *plan,
                                   double y0,
                                   double *x_out,
                                   double *y_out,
                                   uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BISIS_H */
