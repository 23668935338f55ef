#ifndef REGSUM_H
#define REGSUM_H

/* Generated with cbindgen:0.27.0 */

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>



typedef enum RegsumStatus {
  REGSUM_STATUS_OK = 0,
  REGSUM_STATUS_NULL_ARGUMENT = 1,
  REGSUM_STATUS_INVALID_ARGUMENT = 2,
  REGSUM_STATUS_PARSE = 3,
  REGSUM_STATUS_IO = 4,
  REGSUM_STATUS_SUMMARY_FAILED = 5,
  REGSUM_STATUS_FORMAT = 6,
  REGSUM_STATUS_PANIC = 7,
} RegsumStatus;

typedef struct RegsumGraph RegsumGraph;

typedef struct RegsumStore RegsumStore;

typedef struct RegsumSummary RegsumSummary;

/**
 * Summarizer settings; fill with [`regsum_config_default`] first.
 */
typedef struct RegsumConfig {
  double epsilon;
  double c_min;
  double d_prime;
  size_t initial_k;
  uint64_t seed;
  bool classic_loop;
  bool fallback;
} RegsumConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *regsum_version(void);

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *regsum_last_error(void);

/**
 * # Safety
 * `out` must be null or point to writable memory for one `RegsumConfig`.
 */
enum RegsumStatus regsum_config_default(struct RegsumConfig *out);

/**
 * Reads a `u v [w]` edge list.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum RegsumStatus regsum_graph_load(const char *path, struct RegsumGraph **out);

/**
 * Builds a graph from `count` edges. `weights` may be NULL for unit weights.
 *
 * # Safety
 * `sources` and `targets` (and `weights` when non-null) must hold `count`
 * elements; `out` must be writable.
 */
enum RegsumStatus regsum_graph_from_edges(size_t n,
                                          const size_t *sources,
                                          const size_t *targets,
                                          const double *weights,
                                          size_t count,
                                          struct RegsumGraph **out);

/**
 * # Safety
 * `g` must be null or a live graph handle.
 */
size_t regsum_graph_vertex_count(const struct RegsumGraph *g);

/**
 * # Safety
 * `g` must be null or a handle from this library, freed at most once.
 */
void regsum_graph_free(struct RegsumGraph *g);

/**
 * Summarizes `g`; `cfg` may be NULL for the defaults.
 *
 * # Safety
 * Handles must be live; `cfg` null or valid; `out` writable.
 */
enum RegsumStatus regsum_summarize(const struct RegsumGraph *g,
                                   const struct RegsumConfig *cfg,
                                   struct RegsumSummary **out);

/**
 * # Safety
 * `s` must be null or a live summary handle.
 */
size_t regsum_summary_class_count(const struct RegsumSummary *s);

/**
 * # Safety
 * `s` must be null or a live summary handle.
 */
size_t regsum_summary_class_size(const struct RegsumSummary *s);

/**
 * NaN for a null handle.
 *
 * # Safety
 * `s` must be null or a live summary handle.
 */
double regsum_summary_sze_idx(const struct RegsumSummary *s);

/**
 * Writes the class of every vertex into `classes` (-1 for the exceptional
 * set). `len` must equal the vertex count.
 *
 * # Safety
 * `classes` must hold `len` writable elements.
 */
enum RegsumStatus regsum_summary_membership(const struct RegsumSummary *s,
                                            int64_t *classes,
                                            size_t len);

/**
 * Saves the summary in the text summary format.
 *
 * # Safety
 * `s` must be live; `path` a NUL-terminated string.
 */
enum RegsumStatus regsum_summary_write(const struct RegsumSummary *s, const char *path);

/**
 * l_p distance between the blown-up summary and `reference`.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum RegsumStatus regsum_summary_reconstruction_error(const struct RegsumSummary *s,
                                                      const struct RegsumGraph *reference,
                                                      double p,
                                                      bool normalized,
                                                      double *out);

/**
 * # Safety
 * `s` must be null or a handle from this library, freed at most once.
 */
void regsum_summary_free(struct RegsumSummary *s);

/**
 * Opens a store file; with `create` a missing file becomes a new
 * Laplacian-spectrum store.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` writable.
 */
enum RegsumStatus regsum_store_open(const char *path, bool create, struct RegsumStore **out);

/**
 * # Safety
 * `store` must be null or a live store handle.
 */
size_t regsum_store_len(const struct RegsumStore *store);

/**
 * Summarizes `g` and appends it. `source` may be NULL.
 *
 * # Safety
 * Handles must be live; `cfg` null or valid; `source` null or
 * NUL-terminated; `id_out` null or writable.
 */
enum RegsumStatus regsum_store_add(struct RegsumStore *store,
                                   const struct RegsumGraph *g,
                                   const struct RegsumConfig *cfg,
                                   bool keep_full,
                                   const char *source,
                                   uint64_t created,
                                   uint64_t *id_out);

/**
 * Top-`k` search. Fills `ids` and `distances` (each with room for `k`
 * entries) and sets `count` to the number of hits. A `head` of `SIZE_MAX`
 * picks the default alignment.
 *
 * # Safety
 * Handles must be live; `cfg` null or valid; `ids` and `distances` must
 * hold `k` writable elements; `count` writable.
 */
enum RegsumStatus regsum_store_query(const struct RegsumStore *store,
                                     const struct RegsumGraph *g,
                                     const struct RegsumConfig *cfg,
                                     size_t k,
                                     size_t head,
                                     bool one_stage,
                                     uint64_t *ids,
                                     double *distances,
                                     size_t *count);

/**
 * # Safety
 * `store` must be null or a handle from this library, freed at most once.
 */
void regsum_store_free(struct RegsumStore *store);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REGSUM_H */
