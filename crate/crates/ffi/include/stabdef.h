#ifndef STABDEF_H
#define STABDEF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StabdefStatus {
  STABDEF_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  STABDEF_STATUS_NULL_ARGUMENT = 1,
  /**
   * Parse, validation or I/O failure.
   */
  STABDEF_STATUS_INPUT = 2,
  /**
   * Division by zero, NaN or a failed numeric solve.
   */
  STABDEF_STATUS_NUMERIC = 3,
  /**
   * A Rust panic was caught at the boundary.
   */
  STABDEF_STATUS_PANIC = 4,
} StabdefStatus;

/**
 * Opaque parsed kernel expression.
 */
typedef struct StabdefKernel StabdefKernel;

/**
 * Opaque formula table.
 */
typedef struct StabdefTable StabdefTable;

/**
 * Iterated limits of a kernel; a `has_*` flag of 0 means the limit did
 * not settle and the value is unspecified.
 */
typedef struct StabdefDoubleLimit {
  bool has_limit_nm;
  double limit_nm;
  bool has_limit_mn;
  double limit_mn;
  bool has_gap;
  double gap;
} StabdefDoubleLimit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. The pointer
 * stays valid until the next failing call on this thread.
 */
const char *stabdef_last_error(void);

/**
 * Creates a table from `rows * cols` row-major values in `[0, 1]`.
 *
 * # Safety
 * `values` must point to `rows * cols` doubles; `out` must be writable.
 */
enum StabdefStatus stabdef_table_new(const double *values,
                                     size_t rows,
                                     size_t cols,
                                     struct StabdefTable **out_table);

/**
 * Loads a table from a CSV file.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out_table` must be writable.
 */
enum StabdefStatus stabdef_table_load_csv(const char *path, struct StabdefTable **out_table);

/**
 * Releases a table. Null is ignored.
 *
 * # Safety
 * `table` must come from this library and not be used afterwards.
 */
void stabdef_table_free(struct StabdefTable *table);

/**
 * # Safety
 * `table` must be a live handle or null.
 */
size_t stabdef_table_rows(const struct StabdefTable *table);

/**
 * # Safety
 * `table` must be a live handle or null.
 */
size_t stabdef_table_cols(const struct StabdefTable *table);

/**
 * # Safety
 * `table` must be a live handle; `out_value` must be writable.
 */
enum StabdefStatus stabdef_table_get(const struct StabdefTable *table,
                                     size_t row,
                                     size_t col,
                                     double *out_value);

/**
 * New handle holding the transpose of `table`.
 *
 * # Safety
 * `table` must be a live handle; `out_table` must be writable.
 */
enum StabdefStatus stabdef_table_transpose(const struct StabdefTable *table,
                                           struct StabdefTable **out_table);

/**
 * Exact ladder index of `table` at margin `delta`.
 *
 * # Safety
 * `table` must be a live handle; `out_index` must be writable.
 */
enum StabdefStatus stabdef_ladder_index(const struct StabdefTable *table,
                                        double delta,
                                        size_t *out_index);

/**
 * Number of realized types of `table` at tolerance `tol`.
 *
 * # Safety
 * `table` must be a live handle; `out_count` must be writable.
 */
enum StabdefStatus stabdef_realized_type_count(const struct StabdefTable *table,
                                               double tol,
                                               size_t *out_count);

/**
 * Size of an epsilon-net of the rows; `out_exact` tells whether it is the
 * minimum.
 *
 * # Safety
 * `table` must be a live handle; outputs must be writable.
 */
enum StabdefStatus stabdef_density_character(const struct StabdefTable *table,
                                             double epsilon,
                                             size_t *out_size,
                                             bool *out_exact);

/**
 * Best convex combination of all rows approximating `target` (length =
 * column count) in the sup norm. `out_weights` receives one weight per
 * row.
 *
 * # Safety
 * `target` must hold `target_len` doubles and `out_weights` room for one
 * double per row.
 */
enum StabdefStatus stabdef_lp_define(const struct StabdefTable *table,
                                     const double *target,
                                     size_t target_len,
                                     double *out_weights,
                                     double *out_error);

/**
 * Smallest odd `k <= k_max` whose strict majority vote of rows equals the
 * Boolean `target`. `out_counts` receives each row's multiplicity; `out_k`
 * is 0 when no such vote exists.
 *
 * # Safety
 * `target` must hold `target_len` doubles and `out_counts` room for one
 * `size_t` per row.
 */
enum StabdefStatus stabdef_majority_define(const struct StabdefTable *table,
                                           const double *target,
                                           size_t target_len,
                                           size_t k_max,
                                           size_t *out_k,
                                           size_t *out_counts);

/**
 * Parses a kernel expression.
 *
 * # Safety
 * `source` must be a nul-terminated string; `out_kernel` must be writable.
 */
enum StabdefStatus stabdef_kernel_parse(const char *source, struct StabdefKernel **out_kernel);

/**
 * Releases a kernel. Null is ignored.
 *
 * # Safety
 * `kernel` must come from this library and not be used afterwards.
 */
void stabdef_kernel_free(struct StabdefKernel *kernel);

/**
 * Canonical text of a kernel, to be released with
 * [`stabdef_string_free`]. Null if `kernel` is null.
 *
 * # Safety
 * `kernel` must be a live handle or null.
 */
char *stabdef_kernel_to_string(const struct StabdefKernel *kernel);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void stabdef_string_free(char *s);

/**
 * Evaluates a kernel at one pair of points, clamped to `[0, 1]`.
 *
 * # Safety
 * `x` and `y` must hold `x_len` and `y_len` doubles.
 */
enum StabdefStatus stabdef_kernel_eval(const struct StabdefKernel *kernel,
                                       const double *x,
                                       size_t x_len,
                                       const double *y,
                                       size_t y_len,
                                       double *out_value);

/**
 * Tabulates a kernel on `nx` points of dimension `x_dim` against `ny`
 * points of dimension `y_dim` (both row-major).
 *
 * # Safety
 * The point buffers must hold `nx * x_dim` and `ny * y_dim` doubles.
 */
enum StabdefStatus stabdef_kernel_sample(const struct StabdefKernel *kernel,
                                         const double *xs,
                                         size_t nx,
                                         size_t x_dim,
                                         const double *ys,
                                         size_t ny,
                                         size_t y_dim,
                                         struct StabdefTable **out_table);

/**
 * Iterated double limits of a kernel along two point sequences.
 *
 * # Safety
 * The point buffers must hold `nx * dim` and `ny * dim` doubles.
 */
enum StabdefStatus stabdef_double_limit(const struct StabdefKernel *kernel,
                                        const double *xs,
                                        size_t nx,
                                        const double *ys,
                                        size_t ny,
                                        size_t dim,
                                        size_t window,
                                        double tol,
                                        struct StabdefDoubleLimit *out_report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STABDEF_H */
