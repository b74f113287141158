#pragma once

// Large-system learning curves for the leading principal direction of a
// spiked covariance model, with and without entries missing completely at
// random.
//
//   alpha : samples per dimension, N / D
//   snr   : ||a||^2 / sigma^2
//   m     : missing rate

namespace spiked {

/// Expected squared overlap for complete data:
/// 0 below alpha*S^2 = 1, (alpha*S^2 - 1) / (S + alpha*S^2) above it.
double theory_r2_complete(double alpha, double snr);

/// Missing data at rate m acts on the signal-to-noise ratio, S -> (1 - m) S.
double theory_r2_missing(double alpha, double snr, double missing_rate);

/// Competing hypothesis where missing data shrinks the sample, alpha -> (1 - m) alpha.
double theory_r2_effective_sample(double alpha, double snr, double missing_rate);

/// Missing rate above which the predicted overlap vanishes, clamped to [0, 1].
double critical_missing_rate(double alpha, double snr);

/// Smallest alpha for which learning occurs at missing rate m: 1 / ((1 - m) S)^2.
/// Throws DomainError for m = 1.
double critical_alpha(double snr, double missing_rate);

/// Large-alpha expansion 1 - (S + 1) / (S^2 alpha). Approximation only; requires
/// alpha*S^2 > 1.
double asymptotic_r2(double alpha, double snr);

struct TheoryPoint {
  double alpha;
  double snr;
  double missing_rate;
  double effective_snr;
  double predicted_r2;
};

TheoryPoint make_theory_point(double alpha, double snr, double missing_rate);

}  // namespace spiked
