#include "spiked_pca/metrics.hpp"

#include <cmath>
#include <string>

#include "spiked_pca/errors.hpp"
#include "spiked_pca/random.hpp"

namespace spiked {

double r_squared(const Vector& estimate, const Vector& truth) {
  if (estimate.size() != truth.size()) {
    throw DomainError("r_squared: vectors have different lengths");
  }
  const double estimate_norm = estimate.squaredNorm();
  const double truth_norm = truth.squaredNorm();
  if (!(estimate_norm > 0.0) || !(truth_norm > 0.0)) {
    throw DomainError("r_squared: zero vector");
  }
  const double dot = estimate.dot(truth);
  return std::min(1.0, dot * dot / (estimate_norm * truth_norm));
}

SnrEstimate estimate_snr(const Vector& eigenvalues, Index k) {
  const Index dim = eigenvalues.size();
  if (k < 1 || k >= dim) {
    throw DomainError("estimate_snr: k=" + std::to_string(k) + " must satisfy 1 <= k < D=" +
                      std::to_string(dim));
  }
  for (Index i = 0; i < dim; ++i) {
    if (!(eigenvalues(i) >= 0.0)) throw DomainError("eigenvalues must be nonnegative");
    if (i > 0 && eigenvalues(i) > eigenvalues(i - 1)) {
      throw DomainError("eigenvalues must be sorted in descending order");
    }
  }

  SnrEstimate out;
  out.k = k;
  out.noise_variance_hat = eigenvalues.tail(dim - k).mean();
  if (!(out.noise_variance_hat > 0.0)) {
    throw DomainError("degenerate spectrum: trailing eigenvalues are all zero");
  }
  out.snr_per_component.resize(k);
  for (Index i = 0; i < k; ++i) {
    const double raw = (eigenvalues(i) - out.noise_variance_hat) / out.noise_variance_hat;
    if (raw < 0.0) out.floored_components.push_back(i);
    out.snr_per_component(i) = std::max(raw, 0.0);
  }
  return out;
}

Vector snr_after_added_noise(const Vector& eigenvalues, Index k, double added_variance) {
  if (!(added_variance >= 0.0)) throw DomainError("added noise variance must be nonnegative");
  const SnrEstimate base = estimate_snr(eigenvalues, k);
  Vector out(k);
  for (Index i = 0; i < k; ++i) {
    out(i) = std::max(eigenvalues(i) - base.noise_variance_hat, 0.0) /
             (base.noise_variance_hat + added_variance);
  }
  return out;
}

MaskedMatrix add_isotropic_noise(const MaskedMatrix& x, double added_variance,
                                 std::uint64_t seed) {
  if (!(added_variance >= 0.0) || !std::isfinite(added_variance)) {
    throw DomainError("added noise variance must be nonnegative and finite");
  }
  if (added_variance == 0.0) return x;

  const double sd = std::sqrt(added_variance);
  Rng rng(seed);
  Matrix values = x.values();
  for (Index n = 0; n < x.rows(); ++n) {
    for (Index d = 0; d < x.cols(); ++d) {
      if (x.observed(n, d)) values(n, d) += sd * rng.normal();
    }
  }
  return MaskedMatrix(std::move(values), x.mask());
}

Vector component_r2(const Matrix& fitted, const Matrix& truth_directions) {
  if (fitted.rows() != truth_directions.rows() || fitted.cols() != truth_directions.cols()) {
    throw DomainError("component_r2: fitted is " + std::to_string(fitted.rows()) + "x" +
                      std::to_string(fitted.cols()) + " but truth is " +
                      std::to_string(truth_directions.rows()) + "x" +
                      std::to_string(truth_directions.cols()));
  }
  Vector out(fitted.cols());
  for (Index i = 0; i < fitted.cols(); ++i) {
    out(i) = r_squared(fitted.col(i), truth_directions.col(i));
  }
  return out;
}

Vector component_r2(const Matrix& fitted, const GroundTruth& truth) {
  return component_r2(fitted, truth.directions);
}

}  // namespace spiked
