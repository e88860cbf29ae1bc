#ifndef THUWB_H
#define THUWB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every call.
 */
typedef enum ThuwbStatus {
  THUWB_STATUS_OK = 0,
  THUWB_STATUS_NULL_POINTER = 1,
  THUWB_STATUS_INVALID_PARAMETER = 2,
  THUWB_STATUS_INFEASIBLE_MASK = 3,
  THUWB_STATUS_INSUFFICIENT_DATA = 4,
  THUWB_STATUS_PARSE = 5,
  THUWB_STATUS_IO = 6,
  /**
   * Output buffer too short; the required length was still written.
   */
  THUWB_STATUS_BUFFER_TOO_SMALL = 7,
  /**
   * A Rust panic was caught at the boundary.
   */
  THUWB_STATUS_INTERNAL = 8,
} ThuwbStatus;

/**
 * One multipath channel realization.
 */
typedef struct ThuwbChannel ThuwbChannel;

/**
 * A configured experiment.
 */
typedef struct ThuwbExperiment ThuwbExperiment;

/**
 * A prepared link scenario.
 */
typedef struct ThuwbLink ThuwbLink;

/**
 * Outcome of one link trial.
 */
typedef struct ThuwbTrialResult {
  double snr_db;
  double nmse;
  size_t packets;
  size_t packet_errors;
  size_t acquisition_tests;
  bool acquired;
  bool success;
  /**
   * The chain aborted; the message is available from [`thuwb_last_error`].
   */
  bool aborted;
} ThuwbTrialResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *thuwb_version(void);

/**
 * Message of the last failed call on this thread, or NULL after a success.
 *
 * The pointer stays valid until the next call on the same thread.
 */
const char *thuwb_last_error(void);

/**
 * Sample a unit-energy Gaussian-derivative pulse on a grid of `sample_period`
 * seconds over `[-half_support, half_support]`.
 *
 * `start_index` receives the grid index of the first sample.
 *
 * # Safety
 * `out` must hold `cap` doubles; `out_len` and `start_index` must be valid.
 */
enum ThuwbStatus thuwb_gaussian_pulse(uint32_t derivative_order,
                                      double sigma,
                                      double sample_period,
                                      double half_support,
                                      double *out,
                                      size_t cap,
                                      size_t *out_len,
                                      int64_t *start_index);

/**
 * Rate-1/2 convolutional encoding of 0/1 bytes with zero tail.
 *
 * # Safety
 * `bits` must hold `n_bits` bytes and `out` `cap` bytes.
 */
enum ThuwbStatus thuwb_conv_encode(const uint8_t *bits,
                                   size_t n_bits,
                                   uint8_t *out,
                                   size_t cap,
                                   size_t *out_len);

/**
 * Viterbi decoding of a terminated block; positive soft values favour 0.
 *
 * # Safety
 * `llrs` must hold `n` doubles and `out` `cap` bytes.
 */
enum ThuwbStatus thuwb_viterbi_decode(const double *llrs,
                                      size_t n,
                                      uint8_t *out,
                                      size_t cap,
                                      size_t *out_len);

/**
 * Draw a realization of `model` ("CM1".."CM4" or "AWGN") from `seed`.
 *
 * # Safety
 * `model` must be a NUL-terminated string; `out` must be valid.
 */
enum ThuwbStatus thuwb_channel_generate(const char *model,
                                        uint64_t seed,
                                        struct ThuwbChannel **out);

/**
 * Number of paths in the realization.
 *
 * # Safety
 * `ch` must come from [`thuwb_channel_generate`]; `out` must be valid.
 */
enum ThuwbStatus thuwb_channel_path_count(const struct ThuwbChannel *ch, size_t *out);

/**
 * Copy path delays (seconds) and gains into two buffers of `cap` doubles.
 *
 * # Safety
 * `delays` and `gains` must each hold `cap` doubles.
 */
enum ThuwbStatus thuwb_channel_paths(const struct ThuwbChannel *ch,
                                     double *delays,
                                     double *gains,
                                     size_t cap,
                                     size_t *out_len);

/**
 * RMS delay spread of the realization, seconds.
 *
 * # Safety
 * `ch` must come from [`thuwb_channel_generate`]; `out` must be valid.
 */
enum ThuwbStatus thuwb_channel_rms_delay_spread(const struct ThuwbChannel *ch, double *out);

/**
 * # Safety
 * `ch` must come from [`thuwb_channel_generate`] and not be used afterwards.
 */
void thuwb_channel_free(struct ThuwbChannel *ch);

/**
 * Build a link from a TOML scenario; an empty string gives the defaults.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be valid.
 */
enum ThuwbStatus thuwb_link_new(const char *toml, struct ThuwbLink **out);

/**
 * Run realization `trial` at `distance` meters.
 *
 * An aborted chain still returns `Ok` with `aborted` set and the message
 * stored as the last error.
 *
 * # Safety
 * `link` must come from [`thuwb_link_new`]; `out` must be valid.
 */
enum ThuwbStatus thuwb_link_run_trial(const struct ThuwbLink *link,
                                      uint64_t trial,
                                      double distance,
                                      struct ThuwbTrialResult *out);

/**
 * # Safety
 * `link` must come from [`thuwb_link_new`] and not be used afterwards.
 */
void thuwb_link_free(struct ThuwbLink *link);

/**
 * Parse an experiment table with a `command` key, e.g. `command = "ber-study"`.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be valid.
 */
enum ThuwbStatus thuwb_experiment_from_toml(const char *toml, struct ThuwbExperiment **out);

/**
 * # Safety
 * `e` must come from [`thuwb_experiment_from_toml`].
 */
enum ThuwbStatus thuwb_experiment_set_seed(struct ThuwbExperiment *e, uint64_t seed);

/**
 * # Safety
 * `e` must come from [`thuwb_experiment_from_toml`].
 */
enum ThuwbStatus thuwb_experiment_set_trials(struct ThuwbExperiment *e, size_t trials);

/**
 * Run the experiment, writing CSVs and a manifest into `out_dir`.
 * `workers` = 0 uses every core; results do not depend on it.
 *
 * # Safety
 * `e` must come from [`thuwb_experiment_from_toml`]; `out_dir` must be a
 * NUL-terminated path.
 */
enum ThuwbStatus thuwb_experiment_run(const struct ThuwbExperiment *e,
                                      const char *out_dir,
                                      size_t workers);

/**
 * # Safety
 * `e` must come from [`thuwb_experiment_from_toml`] and not be used afterwards.
 */
void thuwb_experiment_free(struct ThuwbExperiment *e);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THUWB_H */
