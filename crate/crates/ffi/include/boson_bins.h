#ifndef BOSON_BINS_H
#define BOSON_BINS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every fallible call.
 */
typedef enum BbStatus {
  BB_STATUS_OK = 0,
  BB_STATUS_NULL_POINTER = 1,
  BB_STATUS_INVALID_ARGUMENT = 2,
  BB_STATUS_INVALID_PARTITION = 3,
  BB_STATUS_INVALID_GRAM = 4,
  BB_STATUS_INVALID_UNITARY = 5,
  BB_STATUS_NUMERICAL = 6,
  BB_STATUS_TOO_LARGE = 7,
  BB_STATUS_BUFFER_TOO_SMALL = 8,
  BB_STATUS_PANIC = 9,
} BbStatus;

/*
 Binned photon-number distribution.
 */
typedef struct BbDistribution BbDistribution;

/*
 Gram matrix of the photons' internal states.
 */
typedef struct BbGram BbGram;

/*
 Bins of output modes.
 */
typedef struct BbPartition BbPartition;

/*
 Interferometer unitary.
 */
typedef struct BbUnitary BbUnitary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. Valid until the
 next call from the same thread.
 */
const char *bb_last_error_message(void);

/*
 Haar-random `m x m` unitary, reproducible from `seed`.

 # Safety
 `out` must be a valid pointer.
 */
enum BbStatus bb_unitary_haar(size_t m, uint64_t seed, struct BbUnitary **out);

/*
 `m`-mode discrete Fourier interferometer.

 # Safety
 `out` must be a valid pointer.
 */
enum BbStatus bb_unitary_fourier(size_t m, struct BbUnitary **out);

/*
 Unitary from row-major `m*m` arrays; rejected if not unitary.

 # Safety
 `re` and `im` must point to `m*m` doubles; `out` must be valid.
 */
enum BbStatus bb_unitary_from_arrays(size_t m,
                                     const double *re,
                                     const double *im,
                                     struct BbUnitary **out);

/*
 Number of modes, 0 for a null handle.

 # Safety
 `u` must be null or a live handle.
 */
size_t bb_unitary_dim(const struct BbUnitary *u);

/*
 # Safety
 `u` must be null or a handle not yet freed.
 */
void bb_unitary_free(struct BbUnitary *u);

/*
 Partition of `total_modes` outputs. Bin `z` holds the `lengths[z]`
 consecutive entries of `modes` (1-based); `num_bins` bins in total.

 # Safety
 `modes` must hold `sum(lengths)` entries, `lengths` `num_bins`.
 */
enum BbStatus bb_partition_new(size_t total_modes,
                               const size_t *modes,
                               const size_t *lengths,
                               size_t num_bins,
                               struct BbPartition **out);

/*
 `K` contiguous bins of (nearly) equal size.

 # Safety
 `out` must be a valid pointer.
 */
enum BbStatus bb_partition_equal(size_t total_modes, size_t k, struct BbPartition **out);

/*
 # Safety
 `p` must be null or a live handle.
 */
size_t bb_partition_num_bins(const struct BbPartition *p);

/*
 # Safety
 `p` must be null or a handle not yet freed.
 */
void bb_partition_free(struct BbPartition *p);

/*
 `n x n` Gram matrix with all pairwise overlaps equal to `x`.

 # Safety
 `out` must be a valid pointer.
 */
enum BbStatus bb_gram_interpolation(size_t n, double x, struct BbGram **out);

/*
 Gram matrix from row-major `n*n` arrays; must be Hermitian, PSD, unit diagonal.

 # Safety
 `re` and `im` must point to `n*n` doubles; `out` must be valid.
 */
enum BbStatus bb_gram_from_arrays(size_t n,
                                  const double *re,
                                  const double *im,
                                  struct BbGram **out);

/*
 # Safety
 `g` must be null or a handle not yet freed.
 */
void bb_gram_free(struct BbGram *g);

/*
 Exact distribution for `n = dim(gram)` photons in inputs `1..=n`.

 # Safety
 Handles must be live; `out` must be valid.
 */
enum BbStatus bb_binned_distribution(const struct BbUnitary *u,
                                     const struct BbGram *gram,
                                     const struct BbPartition *partition,
                                     struct BbDistribution **out);

/*
 Distribution with uniform transmissivity; the last axis counts lost photons.

 # Safety
 Handles must be live; `out` must be valid.
 */
enum BbStatus bb_lossy_binned_distribution(const struct BbUnitary *u,
                                           const struct BbGram *gram,
                                           const struct BbPartition *partition,
                                           double transmissivity,
                                           struct BbDistribution **out);

/*
 Glynn-estimated distribution with target l1 error `beta`.

 # Safety
 Handles must be live; `out` must be valid.
 */
enum BbStatus bb_approx_binned_distribution(const struct BbUnitary *u,
                                            const struct BbGram *gram,
                                            const struct BbPartition *partition,
                                            double beta,
                                            uint64_t seed,
                                            struct BbDistribution **out);

/*
 Number of axes, 0 for a null handle.

 # Safety
 `d` must be null or a live handle.
 */
size_t bb_distribution_num_bins(const struct BbDistribution *d);

/*
 Number of stored outcomes, 0 for a null handle.

 # Safety
 `d` must be null or a live handle.
 */
size_t bb_distribution_len(const struct BbDistribution *d);

/*
 Copy the axis sizes into `shape` (`capacity` entries available).

 # Safety
 `d` must be live; `shape` must hold `capacity` entries.
 */
enum BbStatus bb_distribution_shape(const struct BbDistribution *d, size_t *shape, size_t capacity);

/*
 Copy the probabilities, row-major with the last axis fastest.

 # Safety
 `d` must be live; `probs` must hold `capacity` entries.
 */
enum BbStatus bb_distribution_probabilities(const struct BbDistribution *d,
                                            double *probs,
                                            size_t capacity);

/*
 `P(k)` for the `len` counts in `k`; 0 outside the support or on bad input.

 # Safety
 `d` must be null or live; `k` must hold `len` entries.
 */
double bb_distribution_prob(const struct BbDistribution *d, const size_t *k, size_t len);

/*
 # Safety
 `d` must be null or a handle not yet freed.
 */
void bb_distribution_free(struct BbDistribution *d);

/*
 `sum_k |p(k) - q(k)|`.

 # Safety
 Handles must be live; `out` must be valid.
 */
enum BbStatus bb_tvd(const struct BbDistribution *p, const struct BbDistribution *q, double *out);

/*
 Bayes comparison of `p0` against `pa` on `num_samples` binned records of
 `width` counts each (row-major). Writes `p_null` and `ln chi`.

 # Safety
 Handles must be live; `samples` must hold `num_samples*width` entries;
 outputs must be valid.
 */
enum BbStatus bb_bayes_update(const struct BbDistribution *p0,
                              const struct BbDistribution *pa,
                              const size_t *samples,
                              size_t num_samples,
                              size_t width,
                              double floor,
                              double *p_null,
                              double *log_chi);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BOSON_BINS_H */
