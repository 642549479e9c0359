#ifndef RCLINK_H
#define RCLINK_H

/* Generated from the rclink-capi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Zero is success; the nonzero values
 * mirror the CLI exit codes, plus 1 for misuse of the boundary itself.
 */
typedef enum {
  /**
   * The call succeeded.
   */
  RCLINK_STATUS_OK = 0,
  /**
   * A pointer was null, a string was not UTF-8, a buffer had the wrong
   * length, or an enum-like argument had no meaning.
   */
  RCLINK_STATUS_INVALID_ARGUMENT = 1,
  /**
   * A parameter combination the library rejects (CLI exit code 2).
   */
  RCLINK_STATUS_CONFIG = 2,
  /**
   * A malformed channel file or unreadable path (CLI exit code 3).
   */
  RCLINK_STATUS_DATA_FORMAT = 3,
  /**
   * A numerically degenerate input, or an internal panic (CLI exit
   * code 4).
   */
  RCLINK_STATUS_NUMERICAL = 4,
} RclinkStatus;

/**
 * An ensemble of frequency-domain channel matrices (opaque).
 */
typedef struct RclinkChannelSet RclinkChannelSet;

/**
 * A mode-multiplexing matrix bound to a frequency grid (opaque).
 */
typedef struct RclinkMixing RclinkMixing;

/**
 * Outcome of one Monte-Carlo link run at one SNR point.
 */
typedef struct {
  /**
   * The SNR of the run in dB (may be +infinity).
   */
  double gamma_db;
  /**
   * Bits actually counted (excluded subcarriers do not contribute).
   */
  uint64_t total_bits;
  /**
   * Bits decoded incorrectly.
   */
  uint64_t error_bits;
  /**
   * `error_bits / total_bits`.
   */
  double ber;
  /**
   * Standard error of the per-channel-sample BER mean.
   */
  double ber_std_error;
  /**
   * (sample, subcarrier) pairs excluded as numerically singular.
   */
  uint64_t singular_subcarriers;
} RclinkLinkResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string; never freed.
 */
const char *rclink_version(void);

/**
 * Description of the most recent failure on the calling thread.
 *
 * The pointer stays valid until the next failing rclink call on the same
 * thread. The content is only meaningful after a call returned a nonzero
 * status.
 */
const char *rclink_last_error_message(void);

/**
 * Synthesize a stirred-chamber channel ensemble.
 *
 * The ensemble holds `platform_states * stirrer_states` independent
 * draws of an `n_rx` x `n_tx` Rayleigh channel on the frequency grid
 * `start_hz + k * step_hz` (`count` points), shaped by an exponential
 * power-delay profile with `tap_count` taps spaced `tap_spacing_s`
 * seconds and decay constant `decay_constant_s`. Identical arguments
 * always produce an identical ensemble. On success `*out` owns the new
 * handle; release it with `rclink_channel_free`.
 */
RclinkStatus rclink_channel_synth(double start_hz,
                                  double step_hz,
                                  size_t count,
                                  size_t platform_states,
                                  size_t stirrer_states,
                                  double tap_spacing_s,
                                  size_t tap_count,
                                  double decay_constant_s,
                                  size_t n_rx,
                                  size_t n_tx,
                                  uint64_t seed,
                                  RclinkChannelSet **out);

/**
 * Load a channel ensemble from a `freq_hz,sample,rx,tx,re,im` CSV file.
 *
 * The file must contain every (frequency, sample, rx, tx) tuple exactly
 * once on a uniform frequency grid. On success `*out` owns the new
 * handle; release it with `rclink_channel_free`.
 */
RclinkStatus rclink_channel_ingest(const char *path, RclinkChannelSet **out);

/**
 * Write a channel ensemble to CSV in the canonical row order.
 *
 * Values survive a round trip through `rclink_channel_ingest` bit-exactly.
 */
RclinkStatus rclink_channel_export(const RclinkChannelSet *set, const char *path);

/**
 * Release a channel handle. Passing null is a no-op.
 */
void rclink_channel_free(RclinkChannelSet *set);

/**
 * Dimensions of a channel ensemble.
 */
RclinkStatus rclink_channel_dims(const RclinkChannelSet *set,
                                 size_t *n_samples,
                                 size_t *n_freqs,
                                 size_t *n_rx,
                                 size_t *n_tx);

/**
 * Frequency grid of a channel ensemble (`start_hz + k * step_hz`).
 */
RclinkStatus rclink_channel_grid(const RclinkChannelSet *set,
                                 double *start_hz,
                                 double *step_hz,
                                 size_t *count);

/**
 * One complex channel coefficient, by (sample, frequency, rx, tx) index.
 */
RclinkStatus rclink_channel_at(const RclinkChannelSet *set,
                               size_t sample,
                               size_t freq,
                               size_t rx,
                               size_t tx,
                               double *re,
                               double *im);

/**
 * Scale `set` so the reference ensemble has unit mean channel gain.
 *
 * Both arguments may be the same handle. The scale factor is computed
 * from `reference`, so two ensembles normalized against a common
 * reference keep their relative power. Fails with
 * `RCLINK_STATUS_NUMERICAL` when the reference has zero mean power. On
 * success `*out` owns a new handle.
 */
RclinkStatus rclink_channel_normalize(const RclinkChannelSet *set,
                                      const RclinkChannelSet *reference,
                                      RclinkChannelSet **out);

/**
 * Build a mode-multiplexing matrix on the grid of `set`.
 *
 * `modes` lists the distinct multiplexed mode orders (at least two
 * entries). `insertion_loss_db` is the total power lost in the
 * multiplexer; `frequency_dependent` draws an independent random unitary
 * per frequency instead of one shared unitary. With `calibrate` the loss
 * is compensated exactly, making the matrix lossless. On success `*out`
 * owns the new handle; release it with `rclink_mixing_free`.
 */
RclinkStatus rclink_mixing_create(const RclinkChannelSet *set,
                                  const int32_t *modes,
                                  size_t n_modes,
                                  double insertion_loss_db,
                                  bool frequency_dependent,
                                  bool calibrate,
                                  uint64_t seed,
                                  RclinkMixing **out);

/**
 * Release a mixing handle. Passing null is a no-op.
 */
void rclink_mixing_free(RclinkMixing *mixing);

/**
 * Apply a mixing matrix to every sample and frequency of an ensemble:
 * `H_mixed(f) = H(f) M(f)`. On success `*out` owns a new handle.
 */
RclinkStatus rclink_channel_apply_mixing(const RclinkChannelSet *set,
                                         const RclinkMixing *mixing,
                                         RclinkChannelSet **out);

/**
 * Compare the Gram matrices `H'H` of two ensembles sample by sample.
 *
 * For a lossless mixing matrix the Gram matrix — and with it capacity —
 * is invariant, so `mixed` against its unmixed `base` should pass at a
 * tight tolerance. `max_deviation` receives the largest absolute entry
 * difference found, `passed` whether it stayed within `tol`.
 */
RclinkStatus rclink_gram_invariance(const RclinkChannelSet *mixed,
                                    const RclinkChannelSet *base,
                                    double tol,
                                    double *max_deviation,
                                    bool *passed);

/**
 * Per-frequency ergodic capacity at SNR `gamma_db`, in bit/s/Hz.
 *
 * `capacity` must point to exactly `len` doubles, and `len` must equal
 * the ensemble's frequency count (see `rclink_channel_dims`); entry `k`
 * receives the capacity at grid frequency `k`.
 */
RclinkStatus rclink_capacity(const RclinkChannelSet *set,
                             double gamma_db,
                             double *capacity,
                             size_t len);

/**
 * Monte-Carlo OFDM link run with zero-forcing detection.
 *
 * Streams equal the ensemble's transmit ports. `constellation_order`
 * must be 4, 16, or 64 (Gray-coded square QAM). `gamma_db` may be
 * +infinity for a noise-free run. Identical arguments always produce an
 * identical result.
 */
RclinkStatus rclink_run_link(const RclinkChannelSet *set,
                             size_t n_subcarriers,
                             size_t cp_len,
                             double sample_rate_hz,
                             uint32_t constellation_order,
                             double gamma_db,
                             size_t frames_per_sample,
                             uint64_t seed,
                             RclinkLinkResult *out);

/**
 * Coherence bandwidth from the ensemble frequency autocorrelation.
 *
 * The result is the smallest frequency lag where the correlation
 * magnitude falls below `threshold` (strictly between 0 and 1).
 * `is_lower_bound` is set when the correlation never crossed the
 * threshold inside the grid span, in which case `bandwidth_hz` is only
 * a lower bound.
 */
RclinkStatus rclink_coherence_bandwidth(const RclinkChannelSet *set,
                                        double threshold,
                                        double *bandwidth_hz,
                                        bool *is_lower_bound);

/**
 * Delay by which `energy_fraction` of the mean impulse-response energy
 * has arrived, in seconds. Useful against a cyclic-prefix duration.
 */
RclinkStatus rclink_excess_delay(const RclinkChannelSet *set,
                                 double energy_fraction,
                                 double *delay_s);

/**
 * Run a complete experiment from configuration text (the same `key =
 * value` format the `rclink` CLI reads, including the `seed` key).
 *
 * Writes `capacity.csv`, `ber.csv`, `correlation.csv`, and
 * `summary.json` into the configured output directory. On success
 * `*summary_json` receives a NUL-terminated copy of the summary
 * document; release it with `rclink_string_free`.
 */
RclinkStatus rclink_run_experiment(const char *config_text, char **summary_json);

/**
 * Release a string returned by this library. Passing null is a no-op.
 */
void rclink_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* RCLINK_H */
