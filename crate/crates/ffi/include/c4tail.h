#ifndef C4TAIL_H
#define C4TAIL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum C4Status {
  C4_STATUS_OK = 0,
  C4_STATUS_NULL_POINTER = 1,
  C4_STATUS_DOMAIN = 2,
  C4_STATUS_BUDGET = 3,
  C4_STATUS_INFEASIBLE = 4,
  C4_STATUS_PRECONDITION = 5,
  C4_STATUS_PARSE = 6,
  C4_STATUS_NO_FEASIBLE_POINT = 7,
  C4_STATUS_PANIC = 8,
} C4Status;

/*
 Opaque graph handle.
 */
typedef struct C4Graph C4Graph;

/*
 Monte Carlo tail estimate with a 95% Wilson interval.
 */
typedef struct C4TailEstimate {
  double p_hat;
  uint64_t hits;
  uint64_t trials;
  double ci_low;
  double ci_high;
  double threshold;
} C4TailEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer stays
 valid until the next call into this library on the same thread.
 */
const char *c4_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *c4_version(void);

/*
 Creates an empty graph on `n` vertices.

 # Safety
 `out` must be valid for a pointer write.
 */
enum C4Status c4_graph_new(size_t n, struct C4Graph **out);

/*
 Parses the `n m` header plus `u v` lines format.

 # Safety
 `text` must be a NUL-terminated string and `out` valid for a pointer write.
 */
enum C4Status c4_graph_parse(const char *text, struct C4Graph **out);

/*
 Releases a graph handle; null is ignored.

 # Safety
 `g` must come from this library and not be used afterwards.
 */
void c4_graph_free(struct C4Graph *g);

/*
 Adds edge `{u, v}`; adding an existing edge is a no-op.

 # Safety
 `g` must be a live handle.
 */
enum C4Status c4_graph_add_edge(struct C4Graph *g, size_t u, size_t v);

/*
 # Safety
 `g` must be a live handle and `out` valid for a write.
 */
enum C4Status c4_graph_vertex_count(const struct C4Graph *g, size_t *out);

/*
 # Safety
 `g` must be a live handle and `out` valid for a write.
 */
enum C4Status c4_graph_edge_count(const struct C4Graph *g, size_t *out);

/*
 Number of induced 4-cycles.

 # Safety
 `g` must be a live handle and `out` valid for a write.
 */
enum C4Status c4_graph_count_induced_c4(const struct C4Graph *g, uint64_t *out);

/*
 Writes the edge list into `buf` (NUL-terminated) when it fits. `needed`
 receives the required size including the terminator either way.

 # Safety
 `g` must be a live handle, `buf` valid for `len` bytes (or null with
 `len = 0`) and `needed` valid for a write.
 */
enum C4Status c4_graph_to_edge_list(const struct C4Graph *g, char *buf, size_t len, size_t *needed);

/*
 Runs core extraction with budget `s`; the result is a new handle.

 # Safety
 `g` must be a live handle and `out` valid for a pointer write.
 */
enum C4Status c4_extract_core(const struct C4Graph *g, double s, double p, struct C4Graph **out);

/*
 `E[X] = 3 C(n,4) p^4 (1-p)^2`.

 # Safety
 `out` must be valid for a write.
 */
enum C4Status c4_expected_induced_c4(size_t n, double p, double *out);

/*
 Rate in units of `n^2 p^2 log(1/p)`.

 # Safety
 `out` must be valid for a write.
 */
enum C4Status c4_normalized_rate(size_t n, double p, double delta, double eps, double *out);

/*
 Family rate over mean-field rate in the sparse regimes.

 # Safety
 `out` must be valid for a write.
 */
enum C4Status c4_gap_ratio(size_t n, double p, double delta, double *out);

/*
 Exact `P(X >= threshold)` for `n <= 7`.

 # Safety
 `out` must be valid for a write.
 */
enum C4Status c4_exact_tail(size_t n, double p, double threshold, double *out);

/*
 Monte Carlo estimate of `P(X >= (1+delta)E[X])`.

 # Safety
 `out` must be valid for a write.
 */
enum C4Status c4_estimate_tail(size_t n,
                               double p,
                               double delta,
                               uint64_t trials,
                               uint64_t seed,
                               struct C4TailEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* C4TAIL_H */
