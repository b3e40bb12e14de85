#ifndef RMA_HALO_H
#define RMA_HALO_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum RmaHaloStatus {
  RMA_HALO_STATUS_OK = 0,
  RMA_HALO_STATUS_NULL_POINTER = 1,
  RMA_HALO_STATUS_INVALID_ARGUMENT = 2,
  RMA_HALO_STATUS_CONFIG = 3,
  RMA_HALO_STATUS_PLAN = 4,
  RMA_HALO_STATUS_SIMULATION = 5,
  /**
   * A halo held wrong values.
   */
  RMA_HALO_STATUS_ORACLE = 6,
  RMA_HALO_STATUS_IO = 7,
  RMA_HALO_STATUS_NOT_FOUND = 8,
  /**
   * A Rust panic was caught at the boundary.
   */
  RMA_HALO_STATUS_INTERNAL = 9,
} RmaHaloStatus;

typedef enum RmaHaloBackend {
  RMA_HALO_BACKEND_P2P = 0,
  RMA_HALO_BACKEND_FENCE = 1,
  RMA_HALO_BACKEND_PSCW = 2,
  RMA_HALO_BACKEND_PASSIVE = 3,
} RmaHaloBackend;

/**
 * Benchmark settings, edited through string keys.
 */
typedef struct RmaHaloBenchConfig RmaHaloBenchConfig;

/**
 * Domain decomposition over a rank grid.
 */
typedef struct RmaHaloPlan RmaHaloPlan;

typedef struct RmaHaloReport RmaHaloReport;

/**
 * One benchmark cell. Times are simulated nanoseconds.
 */
typedef struct RmaHaloCell {
  enum RmaHaloBackend backend;
  /**
   * True for strong scaling, false for weak.
   */
  bool strong;
  size_t ranks;
  size_t fields;
  double mean_comm_time;
  double min_comm_time;
  double max_comm_time;
  double init_block_time;
  uint64_t sync_msgs;
  uint64_t bytes;
  size_t violations;
  size_t mismatches;
} RmaHaloCell;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; do not free.
 */
const char *rma_halo_version(void);

/**
 * Message for the last failed call on this thread, or null. The caller
 * owns the string.
 */
char *rma_halo_last_error(void);

/**
 * # Safety
 * `s` must come from this library, or be null.
 */
void rma_halo_string_free(char *s);

/**
 * Plan where every rank owns `lx * ly * lz` points.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum RmaHaloStatus rma_halo_plan_new_weak(size_t lx,
                                          size_t ly,
                                          size_t lz,
                                          size_t n_ranks,
                                          bool periodic,
                                          size_t depth,
                                          struct RmaHaloPlan **out);

/**
 * Plan splitting a global `nx * ny * nz` grid.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum RmaHaloStatus rma_halo_plan_new_strong(size_t nx,
                                            size_t ny,
                                            size_t nz,
                                            size_t n_ranks,
                                            bool periodic,
                                            size_t depth,
                                            struct RmaHaloPlan **out);

/**
 * # Safety
 * `plan` must come from a plan constructor, or be null.
 */
void rma_halo_plan_free(struct RmaHaloPlan *plan);

/**
 * Rank count and rank grid of a plan. Any output pointer may be null.
 *
 * # Safety
 * `plan` must be a live plan handle.
 */
enum RmaHaloStatus rma_halo_plan_shape(const struct RmaHaloPlan *plan,
                                       size_t *n_ranks,
                                       size_t *px,
                                       size_t *py);

/**
 * Interior dims of `rank`.
 *
 * # Safety
 * `plan` must be a live plan handle; `dims` must hold three values.
 */
enum RmaHaloStatus rma_halo_plan_local_dims(const struct RmaHaloPlan *plan,
                                            size_t rank,
                                            size_t *dims);

/**
 * Bytes exchanged with the neighbor of `rank` in `direction`, for
 * `fields` fields of the rank's local dims. Directions are numbered x-,
 * x+, y-, y+, then the corners x-y-, x-y+, x+y-, x+y+. `column_corners`
 * sizes corners as one column per layer. Returns `NotFound` when the rank
 * has no neighbor in that direction.
 *
 * # Safety
 * `plan` must be a live plan handle; `out` must be valid for a write.
 */
enum RmaHaloStatus rma_halo_plan_region_bytes(const struct RmaHaloPlan *plan,
                                              size_t rank,
                                              uint32_t direction,
                                              size_t fields,
                                              bool column_corners,
                                              size_t *out);

/**
 * Config with the default settings.
 */
struct RmaHaloBenchConfig *rma_halo_bench_config_new(void);

/**
 * # Safety
 * `config` must come from [`rma_halo_bench_config_new`], or be null.
 */
void rma_halo_bench_config_free(struct RmaHaloBenchConfig *config);

/**
 * Sets one option by the name of its CLI flag, e.g. `ranks` = `4,9`.
 *
 * # Safety
 * `config` must be a live handle; `key` and `value` NUL-terminated.
 */
enum RmaHaloStatus rma_halo_bench_config_set(struct RmaHaloBenchConfig *config,
                                             const char *key,
                                             const char *value);

/**
 * Applies `key=value` lines, as in a config file.
 *
 * # Safety
 * `config` must be a live handle; `text` NUL-terminated.
 */
enum RmaHaloStatus rma_halo_bench_config_apply_text(struct RmaHaloBenchConfig *config,
                                                    const char *text);

/**
 * Runs the benchmark. A report whose cells carry violations is still
 * returned with `Ok`; check [`rma_halo_report_failed`].
 *
 * # Safety
 * `config` must be a live handle; `out` valid for a pointer write.
 */
enum RmaHaloStatus rma_halo_bench_run(const struct RmaHaloBenchConfig *config,
                                      struct RmaHaloReport **out);

/**
 * # Safety
 * `report` must come from [`rma_halo_bench_run`], or be null.
 */
void rma_halo_report_free(struct RmaHaloReport *report);

/**
 * # Safety
 * `report` must be a live handle, or null (which yields 0).
 */
size_t rma_halo_report_cell_count(const struct RmaHaloReport *report);

/**
 * Whether any cell recorded violations or halo mismatches.
 *
 * # Safety
 * `report` must be a live handle, or null (which yields false).
 */
bool rma_halo_report_failed(const struct RmaHaloReport *report);

/**
 * # Safety
 * `report` must be a live handle; `out` valid for a write.
 */
enum RmaHaloStatus rma_halo_report_cell(const struct RmaHaloReport *report,
                                        size_t index,
                                        struct RmaHaloCell *out);

/**
 * The report as CSV text, or null on a bad handle. The caller owns the
 * string.
 *
 * # Safety
 * `report` must be a live handle, or null.
 */
char *rma_halo_report_csv(const struct RmaHaloReport *report);

/**
 * # Safety
 * `report` must be a live handle; `path` NUL-terminated.
 */
enum RmaHaloStatus rma_halo_report_write_csv(const struct RmaHaloReport *report, const char *path);

/**
 * Backend comparison text. Fails with `Config` when the report holds
 * fewer than two backends.
 *
 * # Safety
 * `report` must be a live handle; `out` valid for a pointer write.
 */
enum RmaHaloStatus rma_halo_report_compare(const struct RmaHaloReport *report, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RMA_HALO_H */
