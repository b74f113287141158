#pragma once

#include <cstdint>
#include <utility>

#include <Eigen/Dense>

namespace spiked {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// An N x D real matrix with a per-entry observed/missing mask.
///
/// The mask is the only source of truth for missingness; values at missing
/// positions are stored as zero and never read. Instances are immutable.
class MaskedMatrix {
 public:
  /// Fully observed matrix.
  explicit MaskedMatrix(Matrix values);

  /// Throws DomainError if shapes differ or the matrix is empty. Values at
  /// masked-out positions are discarded.
  MaskedMatrix(Matrix values, Mask mask);

  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }

  bool observed(Index row, Index col) const { return mask_(row, col); }
  double value(Index row, Index col) const { return values_(row, col); }

  const Matrix& values() const noexcept { return values_; }
  const Mask& mask() const noexcept { return mask_; }

  Index observed_count() const { return mask_.count(); }
  bool fully_observed() const { return mask_.all(); }

  // Number of observed entries in each column / row.
  Eigen::VectorXi observed_per_column() const;
  Eigen::VectorXi observed_per_row() const;

  // Throws DegenerateColumnError for the first column with no observed entry.
  void require_observed_columns() const;

 private:
  Matrix values_;
  Mask mask_;
};

/// Marks each entry missing independently with probability `missing_rate`.
/// Entries are visited in row-major order, one uniform draw each.
MaskedMatrix apply_mcar_mask(const Matrix& data, double missing_rate,
                             std::uint64_t seed);

/// Subtracts the observed-entry mean of each column from its observed entries.
std::pair<MaskedMatrix, Vector> center_observed(const MaskedMatrix& x);

double observed_fraction(const MaskedMatrix& x);

}  // namespace spiked
