#ifndef CRADLE_H
#define CRADLE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  CRADLE_STATUS_OK = 0,
  CRADLE_STATUS_NULL_POINTER = 1,
  CRADLE_STATUS_INVALID_PARAMETER = 2,
  CRADLE_STATUS_SITE_OUT_OF_RANGE = 3,
  CRADLE_STATUS_PEAK_AT_BOUNDARY = 4,
  CRADLE_STATUS_INSUFFICIENT_COUNTS = 5,
  CRADLE_STATUS_BUFFER_TOO_SMALL = 6,
  CRADLE_STATUS_UNSUPPORTED = 7,
  CRADLE_STATUS_IO = 8,
  CRADLE_STATUS_INTERNAL = 9,
} CradleStatus;

typedef enum {
  CRADLE_NNN_MODE_NONE = 0,
  CRADLE_NNN_MODE_UNIFORM = 1,
  CRADLE_NNN_MODE_SHADOWED = 2,
} CradleNnnMode;

typedef enum {
  CRADLE_SOURCE_KIND_HERALDED_PAIR = 0,
  CRADLE_SOURCE_KIND_THERMAL = 1,
  CRADLE_SOURCE_KIND_COHERENT = 2,
} CradleSourceKind;

typedef enum {
  CRADLE_PAIR_LAW_BERNOULLI = 0,
  CRADLE_PAIR_LAW_POISSON = 1,
} CradlePairLaw;

typedef enum {
  /**
   * Heralded anti-correlation g2(0).
   */
  CRADLE_ESTIMATOR_G2_ZERO = 0,
  /**
   * Signal-idler cross-correlation.
   */
  CRADLE_ESTIMATOR_CROSS_CORRELATION = 1,
  /**
   * Unheralded signal-arm autocorrelation.
   */
  CRADLE_ESTIMATOR_SIGNAL_AUTOCORRELATION = 2,
} CradleEstimator;

/**
 * Opaque chain handle.
 */
typedef struct CradleChain CradleChain;

typedef struct {
  CradleSourceKind kind;
  double mean;
  double transmission;
  double herald_efficiency;
  double dark_count;
  CradlePairLaw pair_law;
} CradleSourceModel;

/**
 * Gate counts per click pattern, indexed by `d1 | d2 << 1 | d3 << 2`.
 */
typedef struct {
  uint64_t n_gates;
  uint64_t patterns[8];
} CradleClickCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Why the most recent call on this thread failed, or null if it succeeded.
 * Valid until the next call into this library on the same thread.
 */
const char *cradle_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cradle_version(void);

/**
 * `J(p) = amplitude·exp(−decay·p)`; pass `amplitude <= 0` for the default law.
 */
CradleStatus cradle_coupling_from_pitch(double amplitude,
                                        double decay,
                                        double pitch_um,
                                        double *out);

/**
 * Boundary-controlled chain from couplings in 1/mm, default coupling law.
 */
CradleStatus cradle_chain_new(size_t n_sites,
                              double strong_coupling,
                              double weak_coupling,
                              CradleChain **out);

/**
 * Chain from pitches in um. `amplitude <= 0` selects the default law.
 */
CradleStatus cradle_chain_from_pitches(size_t n_sites,
                                       double strong_pitch_um,
                                       double weak_pitch_um,
                                       double amplitude,
                                       double decay,
                                       CradleChain **out);

/**
 * Engineered chain with bonds `(rate/2)·√(i(N−i))`.
 */
CradleStatus cradle_chain_new_pst(size_t n_sites, double rate, CradleChain **out);

/**
 * New chain with next-nearest-neighbour terms and, when `island` is nonzero,
 * an island site `distance_um` from the central site. `chain` is unchanged.
 */
CradleStatus cradle_chain_with_defect(const CradleChain *chain,
                                      CradleNnnMode mode,
                                      double m,
                                      double distance_um,
                                      bool island,
                                      CradleChain **out);

/**
 * Releases a handle; null is ignored.
 */
void cradle_chain_free(CradleChain *chain);

/**
 * Number of sites including any island, or 0 for a null handle.
 */
size_t cradle_chain_dim(const CradleChain *chain);

/**
 * Site populations at `z` after injection at site 1. `out` must hold
 * `cradle_chain_dim` values.
 */
CradleStatus cradle_chain_probabilities(const CradleChain *chain,
                                        double z,
                                        double *out,
                                        size_t len);

CradleStatus cradle_chain_transfer_probability(const CradleChain *chain,
                                               size_t from,
                                               size_t to,
                                               double z,
                                               double *out);

/**
 * Closed-form receiving time, mm; unsupported for engineered chains.
 */
CradleStatus cradle_chain_analytic_time(const CradleChain *chain, double *out);

/**
 * First receiving-site maximum in `[lo, hi]` mm. Passing `hi <= lo` uses
 * the default window around the closed-form time.
 */
CradleStatus cradle_chain_find_peak(const CradleChain *chain,
                                    double lo,
                                    double hi,
                                    double *tau,
                                    double *eta);

/**
 * Simulates `n_gates` gates and tallies click patterns.
 */
CradleStatus cradle_simulate_counts(const CradleSourceModel *model,
                                    uint64_t n_gates,
                                    uint64_t seed,
                                    CradleClickCounts *out);

/**
 * Correlation estimate with its delta-method standard error.
 */
CradleStatus cradle_estimate(const CradleClickCounts *counts,
                             CradleEstimator estimator,
                             double *value,
                             double *std_error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRADLE_H */
