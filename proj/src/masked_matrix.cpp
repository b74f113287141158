#include "spiked_pca/masked_matrix.hpp"

#include <string>

#include "spiked_pca/errors.hpp"
#include "spiked_pca/random.hpp"

namespace spiked {

MaskedMatrix::MaskedMatrix(Matrix values)
    : MaskedMatrix(values, Mask::Constant(values.rows(), values.cols(), true)) {}

MaskedMatrix::MaskedMatrix(Matrix values, Mask mask)
    : values_(std::move(values)), mask_(std::move(mask)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw DomainError("masked matrix needs at least one row and one column");
  }
  if (mask_.rows() != values_.rows() || mask_.cols() != values_.cols()) {
    throw DomainError("mask shape " + std::to_string(mask_.rows()) + "x" +
                      std::to_string(mask_.cols()) + " does not match values " +
                      std::to_string(values_.rows()) + "x" +
                      std::to_string(values_.cols()));
  }
  values_ = mask_.select(values_, 0.0);
}

Eigen::VectorXi MaskedMatrix::observed_per_column() const {
  return mask_.cast<int>().colwise().sum().transpose();
}

Eigen::VectorXi MaskedMatrix::observed_per_row() const {
  return mask_.cast<int>().rowwise().sum();
}

void MaskedMatrix::require_observed_columns() const {
  for (Index d = 0; d < cols(); ++d) {
    if (!mask_.col(d).any()) throw DegenerateColumnError(static_cast<std::size_t>(d));
  }
}

MaskedMatrix apply_mcar_mask(const Matrix& data, double missing_rate,
                             std::uint64_t seed) {
  if (!(missing_rate >= 0.0 && missing_rate <= 1.0)) {
    throw DomainError("missing rate must lie in [0, 1], got " +
                      std::to_string(missing_rate));
  }
  if (!data.allFinite()) throw DomainError("data contains non-finite values");

  Rng rng(seed);
  Mask mask(data.rows(), data.cols());
  for (Index n = 0; n < data.rows(); ++n) {
    for (Index d = 0; d < data.cols(); ++d) {
      mask(n, d) = !(rng.uniform() < missing_rate);
    }
  }
  return MaskedMatrix(data, std::move(mask));
}

std::pair<MaskedMatrix, Vector> center_observed(const MaskedMatrix& x) {
  x.require_observed_columns();
  const Eigen::VectorXi counts = x.observed_per_column();
  // Missing entries hold zero, so plain column sums are observed sums.
  const Vector mean = x.values().colwise().sum().transpose().cwiseQuotient(
      counts.cast<double>());
  Matrix centered = x.values().rowwise() - mean.transpose();
  return {MaskedMatrix(std::move(centered), x.mask()), mean};
}

double observed_fraction(const MaskedMatrix& x) {
  return static_cast<double>(x.observed_count()) /
         static_cast<double>(x.rows() * x.cols());
}

}  // namespace spiked
