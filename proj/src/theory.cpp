#include "spiked_pca/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spiked_pca/errors.hpp"

namespace spiked {
namespace {

void check_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError(std::string(name) + " must be positive and finite, got " +
                      std::to_string(value));
  }
}

void check_rate(double m) {
  if (!(m >= 0.0 && m <= 1.0)) {
    throw DomainError("missing rate must lie in [0, 1], got " + std::to_string(m));
  }
}

// Shared by every curve so that identities hold bit for bit. snr may be zero
// here (m = 1), which lands on the no-learning branch.
double learning_curve(double alpha, double snr) {
  const double load = alpha * snr * snr;
  if (load <= 1.0) return 0.0;
  return (load - 1.0) / (snr + load);
}

}  // namespace

double theory_r2_complete(double alpha, double snr) {
  check_positive(alpha, "alpha");
  check_positive(snr, "snr");
  return learning_curve(alpha, snr);
}

double theory_r2_missing(double alpha, double snr, double missing_rate) {
  check_positive(alpha, "alpha");
  check_positive(snr, "snr");
  check_rate(missing_rate);
  return learning_curve(alpha, (1.0 - missing_rate) * snr);
}

double theory_r2_effective_sample(double alpha, double snr, double missing_rate) {
  check_positive(alpha, "alpha");
  check_positive(snr, "snr");
  check_rate(missing_rate);
  return learning_curve((1.0 - missing_rate) * alpha, snr);
}

double critical_missing_rate(double alpha, double snr) {
  check_positive(alpha, "alpha");
  check_positive(snr, "snr");
  return std::clamp(1.0 - 1.0 / (snr * std::sqrt(alpha)), 0.0, 1.0);
}

double critical_alpha(double snr, double missing_rate) {
  check_positive(snr, "snr");
  check_rate(missing_rate);
  if (missing_rate >= 1.0) {
    throw DomainError("no finite alpha allows learning when every entry is missing");
  }
  const double effective = (1.0 - missing_rate) * snr;
  return 1.0 / (effective * effective);
}

double asymptotic_r2(double alpha, double snr) {
  check_positive(alpha, "alpha");
  check_positive(snr, "snr");
  if (!(alpha * snr * snr > 1.0)) {
    throw DomainError("large-alpha expansion requires alpha * snr^2 > 1");
  }
  return 1.0 - (snr + 1.0) / (snr * snr) / alpha;
}

TheoryPoint make_theory_point(double alpha, double snr, double missing_rate) {
  return TheoryPoint{alpha, snr, missing_rate, (1.0 - missing_rate) * snr,
                     theory_r2_missing(alpha, snr, missing_rate)};
}

}  // namespace spiked
