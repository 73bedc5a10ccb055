#ifndef SWITCHLAB_H
#define SWITCHLAB_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_ARGUMENT = 2,
  SL_STATUS_PRECONDITION = 3,
  SL_STATUS_CAP_EXCEEDED = 4,
  SL_STATUS_DOMAIN = 5,
  SL_STATUS_VIOLATION = 6,
  SL_STATUS_INTERNAL = 7,
} SlStatus;

typedef enum SlSource {
  /**
   * Uniform without replacement.
   */
  SL_SOURCE_WITHOUT_REPLACEMENT = 0,
  /**
   * Uniform with replacement.
   */
  SL_SOURCE_WITH_REPLACEMENT = 1,
} SlSource;

/**
 * A deterministic streaming algorithm.
 */
typedef struct SlAlgorithm SlAlgorithm;

/**
 * Output of exhaustive enumeration.
 */
typedef struct SlOracle SlOracle;

/**
 * Per-step memory widths for an alphabet of size `N`.
 */
typedef struct SlProfile SlProfile;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *sl_last_error(void);

/**
 * Builds a profile from `q` explicit widths.
 *
 * # Safety
 * `widths` must point to `q` readable values; `out` must be writable.
 */
enum SlStatus sl_profile_new(uint64_t n, const uint32_t *widths, size_t q, struct SlProfile **out);

/**
 * Parses `const:<s>` or `s1,s2,...`. Pass `q = 0` to take the length from
 * the list.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum SlStatus sl_profile_parse(uint64_t n, size_t q, const char *text, struct SlProfile **out);

/**
 * # Safety
 * `profile` must come from this library and not be freed twice.
 */
void sl_profile_free(struct SlProfile *profile);

/**
 * # Safety
 * `profile` must be a live handle or NULL.
 */
size_t sl_profile_q(const struct SlProfile *profile);

/**
 * # Safety
 * `out` must be writable.
 */
enum SlStatus sl_binary_entropy(double x, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum SlStatus sl_binary_entropy_inverse(double t, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum SlStatus sl_phi(double t, double *out);

/**
 * Bound on the information the `(i+1)`-th distinct draw shares with a
 * state that holds `info` nats about the first `i` draws.
 *
 * # Safety
 * `out` must be writable.
 */
enum SlStatus sl_step_information_bound(uint64_t n, uint64_t i, double info, double *out);

/**
 * Summed per-step bound over the normalized profile, in nats.
 *
 * # Safety
 * `profile` must be live; `out` must be writable.
 */
enum SlStatus sl_chain_bound(const struct SlProfile *profile, double *out);

/**
 * Leading-order upper bound (bits ratio, asymptotic).
 *
 * # Safety
 * `profile` must be live; `out` must be writable.
 */
enum SlStatus sl_leading_upper_bound(const struct SlProfile *profile, double *out);

/**
 * Lower bound achieved by the collision detector. With `normalized`
 * nonzero the profile is normalized first.
 *
 * # Safety
 * `profile` must be live; `out` must be writable.
 */
enum SlStatus sl_construction_lower_bound(const struct SlProfile *profile,
                                          bool normalized,
                                          double *out);

/**
 * # Safety
 * `profile` must be live; `out` must be writable.
 */
enum SlStatus sl_algorithm_collision(const struct SlProfile *profile, struct SlAlgorithm **out);

/**
 * Random lookup-table algorithm on the normalized profile.
 *
 * # Safety
 * `profile` must be live; `out` must be writable.
 */
enum SlStatus sl_algorithm_random(const struct SlProfile *profile,
                                  uint64_t seed,
                                  struct SlAlgorithm **out);

/**
 * # Safety
 * `alg` must come from this library and not be freed twice.
 */
void sl_algorithm_free(struct SlAlgorithm *alg);

/**
 * Enumerates all `N^q` inputs. Fails with `CapExceeded` above `cap`.
 *
 * # Safety
 * `alg` must be live; `out` must be writable.
 */
enum SlStatus sl_oracle_run(const struct SlAlgorithm *alg, uint64_t cap, struct SlOracle **out);

/**
 * # Safety
 * `oracle` must come from this library and not be freed twice.
 */
void sl_oracle_free(struct SlOracle *oracle);

/**
 * Exact KL divergence between final-state distributions, in nats.
 *
 * # Safety
 * `oracle` must be live; `out` must be writable.
 */
enum SlStatus sl_oracle_kl(const struct SlOracle *oracle, double *out);

/**
 * Sum over steps of the information each new symbol shares with the
 * preceding state, in nats.
 *
 * # Safety
 * `oracle` must be live; `out` must be writable.
 */
enum SlStatus sl_oracle_mi_sum(const struct SlOracle *oracle, double *out);

/**
 * Exact acceptance probabilities under both sources.
 *
 * # Safety
 * `oracle` must be live; both outputs must be writable.
 */
enum SlStatus sl_oracle_accept(const struct SlOracle *oracle, double *p_accept, double *q_accept);

/**
 * Sampled acceptance probability and its standard error.
 *
 * # Safety
 * `alg` must be live; both outputs must be writable.
 */
enum SlStatus sl_simulate(const struct SlAlgorithm *alg,
                          enum SlSource source,
                          uint64_t samples,
                          uint64_t seed,
                          double *value,
                          double *stderr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SWITCHLAB_H */
