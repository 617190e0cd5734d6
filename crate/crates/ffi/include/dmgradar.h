#ifndef DMGRADAR_H
#define DMGRADAR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every entry point.
 */
typedef enum DmgStatus {
  DMG_STATUS_OK = 0,
  DMG_STATUS_NULL_POINTER = 1,
  DMG_STATUS_INVALID_ARGUMENT = 2,
  DMG_STATUS_BUFFER_TOO_SMALL = 3,
  DMG_STATUS_CONFIG = 4,
  DMG_STATUS_IO = 5,
  DMG_STATUS_INTERNAL = 6,
} DmgStatus;

/**
 * CEF channel estimator.
 */
typedef struct DmgCefEstimator DmgCefEstimator;

/**
 * Golay complementary pair.
 */
typedef struct DmgGolayPair DmgGolayPair;

/**
 * Complex sample, layout-compatible with `double[2]`.
 */
typedef struct DmgComplex {
  double re;
  double im;
} DmgComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *dmg_last_error(void);

/**
 * Generates the standard Golay pair of `length` (128, 256 or 512).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DmgStatus dmg_golay_pair_new(size_t length, struct DmgGolayPair **out);

/**
 * # Safety
 * `pair` must come from [`dmg_golay_pair_new`] and not be used afterwards.
 */
void dmg_golay_pair_free(struct DmgGolayPair *pair);

/**
 * Length of each sequence of the pair.
 *
 * # Safety
 * `pair` and `len` must be valid pointers.
 */
enum DmgStatus dmg_golay_pair_len(const struct DmgGolayPair *pair, size_t *len);

/**
 * Copies the ±1 values of `a` and `b` into buffers of at least
 * `capacity` entries each.
 *
 * # Safety
 * `a` and `b` must point to `capacity` writable bytes.
 */
enum DmgStatus dmg_golay_pair_values(const struct DmgGolayPair *pair,
                                     int8_t *a,
                                     int8_t *b,
                                     size_t capacity);

/**
 * Estimator for the standard preamble, optionally π/2-rotated.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DmgStatus dmg_cef_estimator_new(bool rotated, struct DmgCefEstimator **out);

/**
 * # Safety
 * `est` must come from [`dmg_cef_estimator_new`] and not be used afterwards.
 */
void dmg_cef_estimator_free(struct DmgCefEstimator *est);

/**
 * Number of delay bins written by [`dmg_cef_estimate`].
 */
size_t dmg_cef_bins(void);

/**
 * Channel estimate from symbol-rate samples `y[0..len]` whose CEF starts at
 * `cef_start`; writes [`dmg_cef_bins`] values to `h`.
 *
 * # Safety
 * `y` must hold `len` samples and `h` `h_capacity` writable samples.
 */
enum DmgStatus dmg_cef_estimate(const struct DmgCefEstimator *est,
                                const struct DmgComplex *y,
                                size_t len,
                                size_t cef_start,
                                struct DmgComplex *h,
                                size_t h_capacity);

/**
 * Range bound (m²) for linear SCNR `scnr`, `p` training symbols and
 * bandwidth `bandwidth` (Hz).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DmgStatus dmg_crlb_range(double scnr, size_t p, double bandwidth, double *out);

/**
 * Single-frame velocity bound (m²/s²).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DmgStatus dmg_crlb_velocity_single(double scnr,
                                        size_t p,
                                        double ts,
                                        double wavelength,
                                        double *out);

/**
 * Multi-frame velocity bound (m²/s²), large-`M` form.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DmgStatus dmg_crlb_velocity_multi(double scnr,
                                       size_t p,
                                       size_t m,
                                       size_t k,
                                       double ts,
                                       double wavelength,
                                       double *out);

/**
 * Exact velocity bound (m²/s²) for `p` contiguous training symbols per frame.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DmgStatus dmg_crlb_velocity_exact(double scnr,
                                       size_t p,
                                       size_t m,
                                       size_t k,
                                       double ts,
                                       double wavelength,
                                       double *out);

/**
 * Single-frame Moose Doppler estimate (Hz) with lag `nd`.
 *
 * # Safety
 * `s` must hold `len` samples; `doppler` must be a valid pointer.
 */
enum DmgStatus dmg_moose_single_frame(const struct DmgComplex *s,
                                      size_t len,
                                      size_t nd,
                                      double ts,
                                      double *doppler);

/**
 * Multi-frame Moose Doppler estimate (Hz). `blocks` holds `m` training
 * blocks of `p` samples back to back, one per frame of `k` symbols.
 *
 * # Safety
 * `blocks` must hold `m·p` samples; `doppler` must be a valid pointer.
 */
enum DmgStatus dmg_moose_multi_frame(const struct DmgComplex *blocks,
                                     size_t p,
                                     size_t m,
                                     size_t k,
                                     double ts,
                                     double *doppler);

/**
 * Runs an experiment described by the TOML document `config` and returns
 * the CSV table in `csv`, released with [`dmg_string_free`]. `kind` may be
 * null when the document names its kind. `workers` 0 picks the default.
 *
 * # Safety
 * `config` must be a NUL-terminated string, `kind` null or NUL-terminated,
 * and `csv` a valid pointer.
 */
enum DmgStatus dmg_run_experiment(const char *config, const char *kind, size_t workers, char **csv);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void dmg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DMGRADAR_H */
