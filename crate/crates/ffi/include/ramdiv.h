#ifndef RAMDIV_H
#define RAMDIV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum RamdivStatus {
  RAMDIV_STATUS_OK = 0,
  RAMDIV_STATUS_NULL_POINTER = 1,
  RAMDIV_STATUS_INVALID_ARGUMENT = 2,
  RAMDIV_STATUS_DIMENSION_MISMATCH = 3,
  RAMDIV_STATUS_DOMAIN = 4,
  RAMDIV_STATUS_NUMERICAL = 5,
  RAMDIV_STATUS_NOT_POSITIVE_DEFINITE = 6,
  RAMDIV_STATUS_UNSUPPORTED = 7,
  /**
   * The computation finished but the value is not finite.
   */
  RAMDIV_STATUS_NON_FINITE = 8,
  RAMDIV_STATUS_PANIC = 9,
} RamdivStatus;

/**
 * Values for [`RamdivDivergence::kind`].
 */
typedef enum RamdivKind {
  RAMDIV_KIND_KL = 0,
  RAMDIV_KIND_TV = 1,
  RAMDIV_KIND_CHI_SQ = 2,
  RAMDIV_KIND_SQ_HELLINGER = 3,
  RAMDIV_KIND_JS = 4,
  /**
   * `param` is β, with β > ½ and β ≠ 1.
   */
  RAMDIV_KIND_F_BETA = 5,
  /**
   * `param` is α in (−1, 1).
   */
  RAMDIV_KIND_F_ALPHA = 6,
} RamdivKind;

/**
 * Values for the `proposal` argument of [`ramdiv_ram_mc`].
 */
typedef enum RamdivProposal {
  RAMDIV_PROPOSAL_PRIOR = 0,
  RAMDIV_PROPOSAL_MIXTURE = 1,
} RamdivProposal;

/**
 * Opaque equal-weight mixture of diagonal Gaussians.
 */
typedef struct RamdivMixture RamdivMixture;

/**
 * Opaque linear-Gaussian encoder `Z | X ~ N(A X + b, σ² I)`.
 */
typedef struct RamdivModel RamdivModel;

/**
 * A divergence. `kind` holds a [`RamdivKind`]; `param` is ignored for kinds without one.
 */
typedef struct RamdivDivergence {
  uint32_t kind;
  double param;
} RamdivDivergence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *ramdiv_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ramdiv_version(void);

/**
 * Normalized generator `f₀(x)` for `x ≥ 0`.
 *
 * # Safety
 * `out` must be valid for writing one double.
 */
enum RamdivStatus ramdiv_f0(struct RamdivDivergence div, double x, double *out);

/**
 * `D_f(Q ‖ P)` for diagonal Gaussians of dimension `dim`.
 *
 * Supported kinds are KL, χ² and squared Hellinger. An infinite χ² sets
 * `*out_is_infinite` and writes `INFINITY` to `*out_value`.
 *
 * # Safety
 * The four input arrays must hold `dim` doubles; the outputs must be writable.
 */
enum RamdivStatus ramdiv_closed_form(struct RamdivDivergence div,
                                     size_t dim,
                                     const double *q_mean,
                                     const double *q_var,
                                     const double *p_mean,
                                     const double *p_var,
                                     double *out_value,
                                     bool *out_is_infinite);

/**
 * Creates a model from `a` (`latent_dim × input_dim`), `b` (`latent_dim`) and `noise_var`.
 *
 * # Safety
 * `a` and `b` must hold the stated number of doubles; `out` must be writable.
 */
enum RamdivStatus ramdiv_model_new(size_t latent_dim,
                                   size_t input_dim,
                                   const double *a,
                                   const double *b,
                                   double noise_var,
                                   struct RamdivModel **out);

/**
 * The synthetic family member with latent dimension `d` at `lambda`,
 * drawn from `seed`. Inputs have dimension 20.
 *
 * # Safety
 * `out` must be writable.
 */
enum RamdivStatus ramdiv_model_synthetic(size_t d,
                                         double lambda,
                                         uint64_t seed,
                                         struct RamdivModel **out);

/**
 * # Safety
 * `model` must be null or a handle from this library not yet freed.
 */
void ramdiv_model_free(struct RamdivModel *model);

/**
 * Input dimension of a model, or 0 for null.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t ramdiv_model_input_dim(const struct RamdivModel *model);

/**
 * Mixture of `n` diagonal Gaussians; `means` and `variances` are `n × dim`.
 *
 * # Safety
 * Both arrays must hold `n * dim` doubles; `out` must be writable.
 */
enum RamdivStatus ramdiv_mixture_new(size_t n,
                                     size_t dim,
                                     const double *means,
                                     const double *variances,
                                     struct RamdivMixture **out);

/**
 * Mixture of the model's conditionals at the `n` rows of `xs` (`n × input_dim`).
 *
 * # Safety
 * `model` must be a live handle, `xs` must hold `n * input_dim` doubles and `out` must be writable.
 */
enum RamdivStatus ramdiv_mixture_from_model(const struct RamdivModel *model,
                                            size_t n,
                                            const double *xs,
                                            struct RamdivMixture **out);

/**
 * # Safety
 * `mixture` must be null or a handle from this library not yet freed.
 */
void ramdiv_mixture_free(struct RamdivMixture *mixture);

/**
 * Dimension of a mixture, or 0 for null.
 *
 * # Safety
 * `mixture` must be null or a live handle.
 */
size_t ramdiv_mixture_dim(const struct RamdivMixture *mixture);

/**
 * Number of components, or 0 for null.
 *
 * # Safety
 * `mixture` must be null or a live handle.
 */
size_t ramdiv_mixture_len(const struct RamdivMixture *mixture);

/**
 * `log q̂(z)` for a point of length `dim`.
 *
 * # Safety
 * `mixture` must be a live handle, `z` must hold `dim` doubles and `out` must be writable.
 */
enum RamdivStatus ramdiv_mixture_log_density(const struct RamdivMixture *mixture,
                                             const double *z,
                                             size_t dim,
                                             double *out);

/**
 * RAM-MC estimate of `D_f(mixture ‖ N(0, I))` from `m_samples` draws.
 *
 * `proposal` holds a [`RamdivProposal`]. If the estimate is not finite the
 * value is still written and the status is `RAMDIV_STATUS_NON_FINITE`.
 *
 * # Safety
 * `mixture` must be a live handle; the outputs must be writable.
 */
enum RamdivStatus ramdiv_ram_mc(struct RamdivDivergence div,
                                const struct RamdivMixture *mixture,
                                size_t m_samples,
                                uint32_t proposal,
                                uint64_t seed,
                                double *out_value,
                                double *out_term_std);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RAMDIV_H */
