#pragma once

#include <cstdint>
#include <vector>

#include "spiked_pca/masked_matrix.hpp"

namespace spiked {

inline constexpr double kNoiseVarianceFloor = 1e-12;

struct FitOptions {
  Index k = 1;
  int max_iterations = 1000;
  // Stop once the relative log-likelihood gain stays below this for
  // `tolerance_streak` consecutive iterations.
  double rel_tolerance = 1e-7;
  int tolerance_streak = 3;
  std::uint64_t seed = 0;
};

struct PpcaModel {
  Vector mean;            // observed column means, fixed before EM
  Matrix loadings;        // D x k
  double noise_variance = 0.0;
  double log_likelihood = 0.0;  // observed-data log-likelihood of this model
  int n_iterations = 0;         // M-steps performed
  bool converged = false;
  Index skipped_rows = 0;       // rows with no observed entry
  // Log-likelihood evaluated at the start of every E-step, ending with
  // `log_likelihood`.
  std::vector<double> log_likelihood_trace;
};

/// Probabilistic PCA by expectation maximization over observed entries only.
///
/// Columns are centered once by their observed means. Each E-step computes,
/// for every row n with observed index set O_n,
///   M_n = A_n^T A_n + sigma^2 I,  <z_n> = M_n^{-1} A_n^T y_n,
///   <z_n z_n^T> = sigma^2 M_n^{-1} + <z_n><z_n>^T,
/// and the M-step solves one k x k system per feature followed by the
/// closed-form noise update. Missing values are never imputed.
///
/// Throws DegenerateColumnError for a column with no observed entry,
/// DomainError for k outside [1, D) and NumericalError if the iteration
/// produces non-finite values.
PpcaModel fit_ppca(const MaskedMatrix& x, const FitOptions& options);

/// Observed-data log-likelihood of `model` on `x` (rows with no observed
/// entry contribute nothing).
double observed_log_likelihood(const MaskedMatrix& x, const PpcaModel& model);

struct Directions {
  Matrix basis;            // D x rank, orthonormal, descending singular value
  Vector singular_values;  // all k singular values of the loadings
  Index rank = 0;

  bool rank_deficient() const noexcept { return rank < singular_values.size(); }
};

/// Left singular vectors of the loadings, which removes the rotational
/// ambiguity of PPCA. Each column's sign is chosen so that its largest-magnitude
/// entry is positive. Columns whose singular value is numerically zero are
/// dropped and reported through `rank`.
Directions extract_directions(const PpcaModel& model);

/// Top-k eigenvectors of the centered (1/N) sample covariance.
Matrix top_eigvec_complete(const Matrix& x, Index k);

/// Same, but rejects input with any missing entry.
Matrix top_eigvec_complete(const MaskedMatrix& x, Index k);

/// Eigenvalues of the centered (1/N) sample covariance in descending order.
Vector sample_spectrum(const Matrix& x);

}  // namespace spiked
