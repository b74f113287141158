#include <cmath>

#include "doctest.h"

#include "spiked_pca/errors.hpp"
#include "spiked_pca/metrics.hpp"
#include "spiked_pca/ppca.hpp"
#include "spiked_pca/random.hpp"
#include "spiked_pca/synthetic.hpp"

using namespace spiked;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

}  // namespace

TEST_SUITE_BEGIN("alignment_metrics");

TEST_CASE("r_squared examples") {
  CHECK(r_squared(vec({1, 0}), vec({1, 0})) == 1.0);
  CHECK(r_squared(vec({1, 0}), vec({0, 1})) == 0.0);
  CHECK(r_squared(vec({1, 1}), vec({1, 0})) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r_squared(vec({-2, 0, 0}), vec({1, 0, 0})) == 1.0);
  CHECK_THROWS_AS(r_squared(vec({0, 0}), vec({1, 0})), DomainError);
  CHECK_THROWS_AS(r_squared(vec({1, 0}), vec({1, 0, 0})), DomainError);
}

TEST_CASE("r_squared is symmetric, scale invariant and in [0, 1]") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    Vector a(7), b(7);
    for (Index i = 0; i < 7; ++i) {
      a(i) = rng.normal();
      b(i) = rng.normal();
    }
    const double r = r_squared(a, b);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
    CHECK(r == doctest::Approx(r_squared(b, a)).epsilon(1e-14));
    CHECK(r == doctest::Approx(r_squared(-3.5 * a, 0.01 * b)).epsilon(1e-12));
  }
}

TEST_CASE("estimate_snr examples") {
  SUBCASE("single spike") {
    const SnrEstimate e = estimate_snr(vec({5, 1, 1, 1}), 1);
    CHECK(e.noise_variance_hat == 1.0);
    CHECK(e.snr_per_component(0) == 4.0);
    CHECK(e.floored_components.empty());
  }
  SUBCASE("two spikes") {
    const SnrEstimate e = estimate_snr(vec({9, 4, 0.5, 0.5, 0.5}), 2);
    CHECK(e.noise_variance_hat == 0.5);
    CHECK(e.snr_per_component(0) == 17.0);
    CHECK(e.snr_per_component(1) == 7.0);
  }
  SUBCASE("component at the noise level") {
    const SnrEstimate e = estimate_snr(vec({3, 1, 1, 1}), 2);
    CHECK(e.noise_variance_hat == 1.0);
    CHECK(e.snr_per_component(1) == 0.0);
    CHECK(e.floored_components.empty());
  }
}

TEST_CASE("estimate_snr validates its input") {
  CHECK_THROWS_AS(estimate_snr(vec({1, 2, 3}), 1), DomainError);
  CHECK_THROWS_AS(estimate_snr(vec({3, 2, -1}), 1), DomainError);
  CHECK_THROWS_AS(estimate_snr(vec({3, 2, 1}), 3), DomainError);
  CHECK_THROWS_AS(estimate_snr(vec({3, 2, 1}), 0), DomainError);
  CHECK_THROWS_AS(estimate_snr(vec({3, 0, 0}), 1), DomainError);
}

TEST_CASE("estimate_snr is exact on a constructed spectrum") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const double sigma2 = 0.1 + rng.uniform();
    const double s1 = 1.0 + 10.0 * rng.uniform();
    const double s2 = 0.5 * s1 * rng.uniform();
    Vector eig = Vector::Constant(30, sigma2);
    eig(0) = sigma2 * (1.0 + s1);
    eig(1) = sigma2 * (1.0 + s2);
    const SnrEstimate e = estimate_snr(eig, 2);
    CHECK(std::abs(e.noise_variance_hat - sigma2) <= 1e-12 * sigma2);
    CHECK(std::abs(e.snr_per_component(0) - s1) <= 1e-12 * s1);
    CHECK(std::abs(e.snr_per_component(1) - s2) <= 1e-12 * std::max(s2, 1.0));
  }
}

TEST_CASE("estimate_snr from a sample spectrum") {
  // |a|^2 = 1, sigma^2 = 0.25  =>  S = 4
  const GroundTruth truth = make_ground_truth(50, {1.0}, 0.25, 31);
  const Matrix x = sample_dataset(truth, 50000, 32);
  const SnrEstimate e = estimate_snr(sample_spectrum(x), 1);
  CHECK(std::abs(e.snr_per_component(0) - 4.0) <= 0.4);
  CHECK(std::abs(e.noise_variance_hat - 0.25) <= 0.25 * 0.02);
}

TEST_CASE("snr_after_added_noise") {
  // (6 - 1) / (1 + 0) = 5, then (6 - 1) / (1 + 4) = 1
  const Vector eig = vec({6, 1, 1, 1});
  CHECK(snr_after_added_noise(eig, 1, 0.0)(0) == 5.0);
  CHECK(snr_after_added_noise(eig, 1, 4.0)(0) == 1.0);
  CHECK(snr_after_added_noise(eig, 1, 0.0)(0) == estimate_snr(eig, 1).snr_per_component(0));
  CHECK_THROWS_AS(snr_after_added_noise(eig, 1, -1.0), DomainError);
}

TEST_CASE("add_isotropic_noise") {
  Rng rng(5);
  Matrix values(40, 6);
  for (Index i = 0; i < values.rows(); ++i)
    for (Index j = 0; j < values.cols(); ++j) values(i, j) = rng.normal();
  const MaskedMatrix x = apply_mcar_mask(values, 0.3, 6);

  SUBCASE("zero variance is the identity") {
    const MaskedMatrix y = add_isotropic_noise(x, 0.0, 1);
    CHECK(y.values() == x.values());
    CHECK((y.mask() == x.mask()).all());
  }
  SUBCASE("mask is preserved and only observed entries change") {
    const MaskedMatrix y = add_isotropic_noise(x, 0.5, 1);
    CHECK((y.mask() == x.mask()).all());
    for (Index i = 0; i < x.rows(); ++i)
      for (Index j = 0; j < x.cols(); ++j)
        if (x.observed(i, j)) CHECK(y.value(i, j) != x.value(i, j));
  }
  SUBCASE("deterministic in the seed") {
    CHECK(add_isotropic_noise(x, 0.5, 9).values() == add_isotropic_noise(x, 0.5, 9).values());
    CHECK_FALSE(add_isotropic_noise(x, 0.5, 9).values() ==
                add_isotropic_noise(x, 0.5, 10).values());
  }
  SUBCASE("negative variance") {
    CHECK_THROWS_AS(add_isotropic_noise(x, -0.1, 1), DomainError);
  }
}

TEST_CASE("add_isotropic_noise has the requested variance") {
  const MaskedMatrix x(Matrix::Zero(400, 100));
  const MaskedMatrix y = add_isotropic_noise(x, 2.0, 3);
  const double n = 40000.0;
  const double variance = y.values().squaredNorm() / n;
  CHECK(std::abs(variance - 2.0) <= 4.0 * 2.0 * std::sqrt(2.0 / n));
}

TEST_CASE("component_r2 pairs columns by index") {
  Matrix truth = Matrix::Zero(3, 2);
  truth(0, 0) = 2.0;
  truth(1, 1) = 1.0;
  Matrix fitted = Matrix::Zero(3, 2);
  fitted(0, 0) = 1.0;
  fitted(0, 1) = 1.0;
  fitted(1, 1) = 1.0;
  const Vector r = component_r2(fitted, truth);
  CHECK(r(0) == 1.0);
  CHECK(r(1) == doctest::Approx(0.5));

  const GroundTruth gt = ground_truth_from_directions(truth, 1.0);
  CHECK(component_r2(fitted, gt) == r);
  CHECK_THROWS_AS(component_r2(Matrix::Zero(3, 1) + Matrix::Ones(3, 1), truth), DomainError);
  CHECK_THROWS_AS(component_r2(Matrix::Ones(4, 2), truth), DomainError);
}

TEST_SUITE_END();
