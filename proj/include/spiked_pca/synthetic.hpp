#pragma once

#include <cstdint>
#include <vector>

#include "spiked_pca/masked_matrix.hpp"

namespace spiked {

/// Signal directions and noise level of a spiked model x = A z + eps.
struct GroundTruth {
  Matrix directions;        // D x k, columns ordered by descending norm
  double noise_variance;    // sigma^2
  Vector snr_per_component; // ||a_i||^2 / sigma^2

  Index dim() const noexcept { return directions.rows(); }
  Index rank() const noexcept { return directions.cols(); }
};

/// Random directions with the requested norms. Each direction starts as a
/// normalized standard-normal vector; with `orthogonal` the set is
/// orthonormalized (Householder QR) before rescaling. Columns are emitted in
/// descending norm order regardless of the order of `norms`.
GroundTruth make_ground_truth(Index dim, const std::vector<double>& norms,
                              double noise_variance, std::uint64_t seed,
                              bool orthogonal = true);

/// Builds a GroundTruth around caller-supplied directions.
GroundTruth ground_truth_from_directions(Matrix directions, double noise_variance);

/// N rows drawn independently as A z + eps, z ~ N(0, I_k), eps ~ N(0, sigma^2 I_D).
/// For each row the k latent draws come first, then the D noise draws.
Matrix sample_dataset(const GroundTruth& truth, Index n, std::uint64_t seed);

}  // namespace spiked
