#include <doctest.h>

#include <cmath>

#include "covrecon/cov_estimator.hpp"

using namespace covrecon;

TEST_CASE("MLE divides by M") {
  Matrix x(2, 2);
  x << 1, 0, 3, 4;
  const TaperedCovariance c = mle_covariance(x);
  CHECK(c.matrix(0, 0) == doctest::Approx(1.0));
  CHECK(c.matrix(1, 1) == doctest::Approx(4.0));
  CHECK(c.matrix(0, 1) == doctest::Approx(2.0));
  CHECK(c.tau == 0);
  CHECK(c.sample_count == 2);
  CHECK_THROWS_AS(mle_covariance(Matrix::Ones(1, 3)), std::invalid_argument);
  CHECK(sample_mean(x)[1] == doctest::Approx(2.0));
}

TEST_CASE("tapering weights") {
  CHECK(tapering_weight(4, 3, 5) == 1.0);
  CHECK(tapering_weight(4, 0, 3) == doctest::Approx(0.5));
  CHECK(tapering_weight(4, 7, 3) == 0.0);
  CHECK(tapering_weight(2, 0, 1) == 1.0);
  CHECK(tapering_weight(2, 0, 2) == 0.0);
  CHECK_THROWS_AS(tapering_weight(3, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(tapering_weight(0, 0, 1), std::invalid_argument);
}

TEST_CASE("tapering width") {
  CHECK(tapering_width(1000, 1.0, 100) == 10);  // 1000^(1/3) = 10 up to rounding
  CHECK(tapering_width(27, 1.0, 100) == 4);
  CHECK(tapering_width(8, 1.0, 100) == 2);
  CHECK(tapering_width(2, 1.0, 100) == 2);
  CHECK(tapering_width(343, 1.0, 9) == 8);
  CHECK(tapering_width(614, 1.0, 9) == 8);   // raw 8.5 rounds up to 10, clamped
  CHECK(tapering_width(1000, 1.0, 5) == 0);  // Q below the raw width: no taper
  CHECK(tapering_width(100000, 2.0, 100) == 10);
}

TEST_CASE("taper zeroes far entries") {
  const Matrix truth = synthetic_decay_covariance(30, 1.0);
  const TaperedCovariance mle = mle_covariance(gaussian_samples(truth, 200, 3));
  const TaperedCovariance t = taper_with_width(mle, 6, 1.0);
  CHECK(t.tau == 6);
  CHECK(t.kind == EstimatorKind::Tapered);
  CHECK(t.matrix(0, 6) == 0.0);
  CHECK(t.matrix(0, 3) == mle.matrix(0, 3));
  CHECK(t.matrix(0, 4) == doctest::Approx(mle.matrix(0, 4) * 2.0 / 3.0));
  CHECK(t.matrix.isApprox(t.matrix.transpose()));
  const TaperedCovariance auto_t = taper(mle, 1.0);
  CHECK(auto_t.tau == tapering_width(200, 1.0, 30));
}

TEST_CASE("rate function branches") {
  // h = 1/128: Q = 129 >= 1e6^(1/3) = 100
  CHECK(rho_tilde(1.0 / 128, 1e6, 1.0, 1) == doctest::Approx(1e-4 + std::log(128.0) / 1e6).epsilon(1e-12));
  // h = 1/64: Q = 65 < 100
  CHECK(rho_tilde(1.0 / 64, 1e6, 1.0, 1) == doctest::Approx(64.0 / 1e6).epsilon(1e-12));
  CHECK(rho_tilde_large_q(1.0 / 64, 1e6, 1.0, 1) == doctest::Approx(1e-4 + std::log(64.0) / 1e6).epsilon(1e-12));
  CHECK(rho_tilde_small_q(1.0 / 16, 100, 2) == doctest::Approx(256.0 / 100).epsilon(1e-12));
}

TEST_CASE("decay class membership") {
  const DecayClassCheck ok = decay_class_check(synthetic_decay_covariance(60, 1.0), 1.0, 2.0, 3.0);
  CHECK(ok.passes);
  CHECK(ok.lambda_max < 3.0);
  CHECK(ok.tails.front() > ok.tails.back());
  const DecayClassCheck flat = decay_class_check(Matrix::Ones(60, 60), 1.0, 2.0, 100.0);
  CHECK_FALSE(flat.passes);
}

TEST_CASE("operator norm") {
  Matrix a = Matrix::Zero(3, 3);
  a.diagonal() << 3, -5, 1;
  CHECK(opnorm(a) == doctest::Approx(5.0));
}

TEST_CASE("gaussian samples and rate study are reproducible") {
  const Matrix truth = synthetic_decay_covariance(20, 1.0);
  CHECK(gaussian_samples(truth, 10, 1) == gaussian_samples(truth, 10, 1));
  const Matrix big = gaussian_samples(truth, 50000, 2);
  CHECK((mle_covariance(big).matrix - truth).cwiseAbs().maxCoeff() < 0.03);
  const auto a = tapering_rate_study(truth, {50, 100}, 3, 1.0, EstimatorKind::Tapered, 5);
  const auto b = tapering_rate_study(truth, {50, 100}, 3, 1.0, EstimatorKind::Tapered, 5);
  REQUIRE(a.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].error == b[i].error);
    CHECK(a[i].error_sq == doctest::Approx(a[i].error * a[i].error));
  }
}
