#pragma once

#include <cstdint>
#include <vector>

#include "spiked_pca/masked_matrix.hpp"
#include "spiked_pca/synthetic.hpp"

namespace spiked {

/// Squared cosine similarity (a_hat . a)^2 / (|a_hat|^2 |a|^2).
/// Throws DomainError for zero vectors or mismatched lengths.
double r_squared(const Vector& estimate, const Vector& truth);

struct SnrEstimate {
  double noise_variance_hat = 0.0;
  Vector snr_per_component;
  Index k = 0;
  // Components whose raw estimate was negative and has been set to zero.
  std::vector<Index> floored_components;
};

/// Noise variance as the mean of the D - k trailing eigenvalues; per-component
/// SNR as (lambda_i - sigma_hat^2) / sigma_hat^2, floored at zero.
/// `eigenvalues` must be nonnegative and sorted descending.
SnrEstimate estimate_snr(const Vector& eigenvalues, Index k);

/// SNR after adding isotropic noise of variance `added_variance`:
/// (lambda_i - sigma_hat^2) / (sigma_hat^2 + added_variance), floored at zero.
Vector snr_after_added_noise(const Vector& eigenvalues, Index k, double added_variance);

/// Adds independent N(0, added_variance) to every observed entry; the mask is
/// unchanged and missing entries consume no draws.
MaskedMatrix add_isotropic_noise(const MaskedMatrix& x, double added_variance,
                                 std::uint64_t seed);

/// Entry i is r_squared(fitted column i, truth column i). Pairing is by index.
Vector component_r2(const Matrix& fitted, const GroundTruth& truth);
Vector component_r2(const Matrix& fitted, const Matrix& truth_directions);

}  // namespace spiked
