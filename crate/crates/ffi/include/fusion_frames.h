#ifndef FUSION_FRAMES_H
#define FUSION_FRAMES_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FfStatus {
  FF_STATUS_OK = 0,
  FF_STATUS_NULL_POINTER = 1,
  /**
   * Bad dimensions, parameters, or malformed input.
   */
  FF_STATUS_INVALID_ARGUMENT = 2,
  FF_STATUS_RANK_DEFICIENT = 3,
  FF_STATUS_NO_CONVERGENCE = 4,
  FF_STATUS_DEGENERATE_DRAW = 5,
  FF_STATUS_IO = 6,
  /**
   * Runtime failure not covered above.
   */
  FF_STATUS_RUNTIME = 7,
  FF_STATUS_PANIC = 8,
} FfStatus;

/**
 * Immutable fusion frame.
 */
typedef struct FfFrame FfFrame;

/**
 * Seeded random stream.
 */
typedef struct FfStream FfStream;

typedef struct FfFrameBounds {
  double lower;
  double upper;
  double tight_constant;
  /**
   * `+inf` when the lower bound is zero.
   */
  double epsilon_tight;
} FfFrameBounds;

typedef struct FfAngleSummary {
  double normalized_min;
  double normalized_max;
  double normalized_mean;
  double max_pair_trace;
  /**
   * NaN unless the frame is equi-dimensional.
   */
  double welch;
} FfAngleSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last non-OK status on this thread. Valid until the next
 * failing call on the same thread; never null.
 */
const char *ff_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void ff_string_free(char *s);

/**
 * Creates stream `stream_id` of `master_seed`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FfStatus ff_stream_new(uint64_t master_seed, uint64_t stream_id, struct FfStream **out);

/**
 * # Safety
 * `stream` must be null or a live handle from [`ff_stream_new`].
 */
void ff_stream_free(struct FfStream *stream);

/**
 * # Safety
 * Pointers must be valid.
 */
enum FfStatus ff_stream_next_u64(struct FfStream *stream, uint64_t *out);

/**
 * # Safety
 * Pointers must be valid.
 */
enum FfStatus ff_stream_standard_normal(struct FfStream *stream, double *out);

/**
 * Samples `count` independent uniformly distributed `subspace_dim`-dimensional
 * subspaces of R^`dim` with unit weights.
 *
 * # Safety
 * Pointers must be valid.
 */
enum FfStatus ff_frame_sample(struct FfStream *stream,
                              size_t dim,
                              size_t subspace_dim,
                              size_t count,
                              struct FfFrame **out);

/**
 * Frame whose subspaces are spanned by consecutive `subspace_dim`-row
 * blocks of one `(count·subspace_dim)×dim` Gaussian matrix.
 *
 * # Safety
 * Pointers must be valid.
 */
enum FfStatus ff_frame_from_gaussian(struct FfStream *stream,
                                     size_t dim,
                                     size_t subspace_dim,
                                     size_t count,
                                     struct FfFrame **out);

/**
 * Parses frame JSON (`{"dim", "weights", "subspaces"}`).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid.
 */
enum FfStatus ff_frame_from_json(const char *json, struct FfFrame **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid.
 */
enum FfStatus ff_frame_load(const char *path, struct FfFrame **out);

/**
 * # Safety
 * Pointers must be valid.
 */
enum FfStatus ff_frame_save(const struct FfFrame *frame, const char *path);

/**
 * # Safety
 * Pointers must be valid. Free the result with [`ff_string_free`].
 */
enum FfStatus ff_frame_to_json(const struct FfFrame *frame, char **out);

/**
 * # Safety
 * `frame` must be null or a live handle from this library.
 */
void ff_frame_free(struct FfFrame *frame);

/**
 * Ambient dimension and number of subspaces.
 *
 * # Safety
 * Pointers must be valid.
 */
enum FfStatus ff_frame_shape(const struct FfFrame *frame, size_t *dim, size_t *count);

/**
 * Writes the `dim×dim` frame operator row-major into `buf`.
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum FfStatus ff_frame_operator(const struct FfFrame *frame, double *buf, size_t len);

/**
 * # Safety
 * Pointers must be valid.
 */
enum FfStatus ff_frame_bounds(const struct FfFrame *frame, struct FfFrameBounds *out);

/**
 * Needs at least two subspaces.
 *
 * # Safety
 * Pointers must be valid.
 */
enum FfStatus ff_angle_summary(const struct FfFrame *frame, struct FfAngleSummary *out);

/**
 * Writes the `count×count` table of `tr[PjPl]` row-major into `buf`.
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum FfStatus ff_pair_values(const struct FfFrame *frame, double *buf, size_t len);

/**
 * `tr[PjPl]` for subspaces `j` and `l` of one frame.
 *
 * # Safety
 * Pointers must be valid.
 */
enum FfStatus ff_hs_inner(const struct FfFrame *frame, size_t j, size_t l, double *out);

/**
 * `s(Ks − N)/((K − 1)N)`; requires `K ≥ 2` and `1 ≤ s ≤ N`.
 *
 * # Safety
 * `out` must be valid.
 */
enum FfStatus ff_welch_bound(size_t dim, size_t count, size_t subspace_dim, double *out);

/**
 * Equiangular window `[lo, hi]` at distortion `epsilon`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum FfStatus ff_equiangular_window(double epsilon,
                                    size_t dim,
                                    size_t subspace_dim,
                                    double *lo,
                                    double *hi);

/**
 * Every closed-form bound at one parameter point, as JSON. `big_m = 0`
 * means `K·s`.
 *
 * # Safety
 * `out` must be valid. Free the result with [`ff_string_free`].
 */
enum FfStatus ff_bounds_json(size_t dim,
                             size_t subspace_dim,
                             size_t count,
                             size_t big_m,
                             double delta,
                             char **out);

/**
 * Runs an experiment from config JSON on `workers` threads. The aggregate
 * report JSON goes to `report_out`; if `csv_out` is non-null the per-trial
 * CSV goes there.
 *
 * # Safety
 * `config_json` must be NUL-terminated; out pointers valid or (`csv_out`) null.
 */
enum FfStatus ff_run_experiment_json(const char *config_json,
                                     size_t workers,
                                     char **report_out,
                                     char **csv_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FUSION_FRAMES_H */
