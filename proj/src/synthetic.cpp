#include "spiked_pca/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "spiked_pca/errors.hpp"
#include "spiked_pca/random.hpp"

namespace spiked {

GroundTruth make_ground_truth(Index dim, const std::vector<double>& norms,
                              double noise_variance, std::uint64_t seed,
                              bool orthogonal) {
  const auto k = static_cast<Index>(norms.size());
  if (k < 1) throw DomainError("at least one signal direction is required");
  if (dim <= k) {
    throw DomainError("dimension " + std::to_string(dim) +
                      " must exceed the number of directions " + std::to_string(k));
  }
  for (double norm : norms) {
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw DomainError("direction norms must be positive and finite");
    }
  }

  Rng rng(seed);
  Matrix raw(dim, k);
  for (Index j = 0; j < k; ++j) {
    for (Index d = 0; d < dim; ++d) raw(d, j) = rng.normal();
  }

  Matrix unit(dim, k);
  if (orthogonal) {
    Eigen::HouseholderQR<Matrix> qr(raw);
    unit = qr.householderQ() * Matrix::Identity(dim, k);
  } else {
    unit = raw.colwise().normalized();
  }

  std::vector<double> sorted = norms;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  Matrix directions(dim, k);
  for (Index j = 0; j < k; ++j) {
    directions.col(j) = sorted[static_cast<std::size_t>(j)] * unit.col(j);
  }
  return ground_truth_from_directions(std::move(directions), noise_variance);
}

GroundTruth ground_truth_from_directions(Matrix directions, double noise_variance) {
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
    throw DomainError("noise variance must be positive and finite");
  }
  if (directions.cols() < 1 || directions.rows() <= directions.cols()) {
    throw DomainError("directions must be D x k with 1 <= k < D");
  }
  Vector snr = directions.colwise().squaredNorm().transpose() / noise_variance;
  // Equal requested norms can come out a few ulps apart after rescaling.
  for (Index j = 1; j < snr.size(); ++j) {
    if (snr(j) > snr(j - 1) * (1.0 + 1e-12)) {
      throw DomainError("directions must be ordered by descending norm");
    }
  }
  return GroundTruth{std::move(directions), noise_variance, std::move(snr)};
}

Matrix sample_dataset(const GroundTruth& truth, Index n, std::uint64_t seed) {
  if (n < 1) throw DomainError("sample count must be at least 1");
  const Index dim = truth.dim();
  const Index k = truth.rank();
  const double noise_sd = std::sqrt(truth.noise_variance);

  Rng rng(seed);
  Matrix data(n, dim);
  Vector z(k);
  for (Index row = 0; row < n; ++row) {
    for (Index j = 0; j < k; ++j) z(j) = rng.normal();
    data.row(row).noalias() = (truth.directions * z).transpose();
    for (Index d = 0; d < dim; ++d) data(row, d) += noise_sd * rng.normal();
  }
  return data;
}

}  // namespace spiked
