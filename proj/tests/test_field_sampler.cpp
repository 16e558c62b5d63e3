#include <doctest.h>

#include <cmath>
#include <numbers>

#include "covrecon/cov_estimator.hpp"
#include "covrecon/field_sampler.hpp"
#include "covrecon/quadrature.hpp"

using namespace covrecon;
using std::numbers::pi;

TEST_CASE("Brownian motion eigenpairs") {
  const KlOracle o(1);
  CHECK(o.eigenvalue(1) == doctest::Approx(4.0 / (pi * pi)).epsilon(1e-15));
  CHECK(o.eigenvalue(2) == doctest::Approx(4.0 / (9.0 * pi * pi)).epsilon(1e-15));
  // mpmath, 50 digits
  CHECK(o.gap(1) == doctest::Approx(0.36025309739497874291).epsilon(1e-14));
  CHECK(o.gap(3) == doctest::Approx(0.0079402723507464702519).epsilon(1e-13));
  CHECK(o.eigenvalue(1) / o.gap(1) == doctest::Approx(9.0 / 8.0).epsilon(1e-14));
  CHECK(o.squared_hs_norm() == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK(o.eigenfunction(1, make_point(1.0)) == doctest::Approx(std::sqrt(2.0)));

  // orthonormality by a fine composite rule
  const CompositeRule rule = composite_rule(build_mesh(1, 64), 6);
  for (Index a = 1; a <= 4; ++a) {
    for (Index b = 1; b <= 4; ++b) {
      double acc = 0.0;
      for (Index i = 0; i < rule.size(); ++i) {
        acc += rule.weights[i] * o.eigenfunction(a, rule.point(i)) * o.eigenfunction(b, rule.point(i));
      }
      CHECK(acc == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("Brownian sheet eigenpairs and levels") {
  const KlOracle o(2);
  const double l1 = 16.0 / std::pow(pi, 4);
  CHECK(o.eigenvalue(1) == doctest::Approx(l1).epsilon(1e-15));
  CHECK(o.eigenvalue(2) == doctest::Approx(l1 / 9.0).epsilon(1e-15));
  CHECK(o.eigenvalue(2) == o.eigenvalue(3));
  CHECK(o.gap(2) == 0.0);
  CHECK(o.eigenvalue(4) == doctest::Approx(l1 / 25.0).epsilon(1e-15));
  const auto [a, b] = o.mode_indices(1);
  CHECK(a == 1);
  CHECK(b == 1);
  CHECK(o.level_eigenvalue(2) == doctest::Approx(l1 / 9.0).epsilon(1e-15));
  CHECK(o.level_gap(1) == doctest::Approx(KlOracle::eigenvalue_1d(1) * KlOracle::gap_1d(1)).epsilon(1e-15));
  CHECK(o.squared_hs_norm() == doctest::Approx(1.0 / 36.0).epsilon(1e-12));
  const double v = o.eigenfunction(2, make_point(0.3, 0.7));
  const auto [c, d] = o.mode_indices(2);
  CHECK(v == doctest::Approx(KlOracle::eigenfunction_1d(c, 0.3) * KlOracle::eigenfunction_1d(d, 0.7)));
  CHECK_THROWS(o.eigenvalue(o.mode_limit() + 1));
}

TEST_CASE("draws are reproducible and independent of the worker count") {
  const AnalyticField f = brownian_field(1);
  const FeSpace space(build_mesh(1, 16));
  const SampleBatch a = draw_batch(f, space, 300, SamplingMode::NodalInterpolation, 42, 200, 1);
  const SampleBatch b = draw_batch(f, space, 300, SamplingMode::NodalInterpolation, 42, 200, 3);
  const SampleBatch c = draw_batch(f, space, 300, SamplingMode::NodalInterpolation, 43, 200, 1);
  CHECK(a.coeffs == b.coeffs);
  CHECK(a.coeffs != c.coeffs);
  CHECK(a.coeffs.col(0).cwiseAbs().maxCoeff() == 0.0);
  const SampleBatch p1 = draw_batch(f, space, 50, SamplingMode::L2ProjectionOfTruncatedKL, 5, 100, 1);
  const SampleBatch p2 = draw_batch(f, space, 50, SamplingMode::L2ProjectionOfTruncatedKL, 5, 100, 2);
  CHECK(p1.coeffs == p2.coeffs);
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
}

TEST_CASE("nodal samples have the exact nodal covariance") {
  for (int dim : {1, 2}) {
    const AnalyticField f = brownian_field(dim);
    const FeSpace space(build_mesh(dim, dim == 1 ? 8 : 4));
    const SampleBatch batch = draw_batch(f, space, 40000, SamplingMode::NodalInterpolation, 11);
    const Matrix sigma = exact_discrete_covariance(f, space);
    const Matrix est = mle_covariance(batch).matrix;
    CHECK((est - sigma).cwiseAbs().maxCoeff() < 0.025);
    // nodes on x = 0 (and y = 0) have zero variance
    CHECK(batch.coeffs.col(0).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("projection and nodal modes agree on nodal variances") {
  const AnalyticField f = brownian_field(1);
  const FeSpace space(build_mesh(1, 16));
  const Index m = 400000;
  const Vector vn = mle_covariance(draw_batch(f, space, m, SamplingMode::NodalInterpolation, 3)).matrix.diagonal();
  const Vector vp =
      mle_covariance(draw_batch(f, space, m, SamplingMode::L2ProjectionOfTruncatedKL, 4, 200)).matrix.diagonal();
  // measured against the largest variance: near x = 0 the relative difference is O(1)
  CHECK((vn - vp).cwiseAbs().maxCoeff() <= 0.02 * vn.maxCoeff());
}

TEST_CASE("moment diagnostics") {
  const AnalyticField f = brownian_field(1);
  const FeSpace space(build_mesh(1, 16));
  const SampleBatch batch = draw_batch(f, space, 5000, SamplingMode::NodalInterpolation, 9);
  const MomentDiagnostics d = moment_diagnostics(batch);
  CHECK(std::isfinite(d.c_inf_hat));
  CHECK(d.c_inf_hat > 0.0);
  CHECK(d.centering_ok);
  const SampleBatch one = draw_batch(f, space, 1, SamplingMode::NodalInterpolation, 9);
  CHECK_THROWS_AS(moment_diagnostics(one), std::invalid_argument);
}

TEST_CASE("field names round-trip") {
  CHECK(field_kind_from_string(to_string(FieldKind::BrownianSheet2D)) == FieldKind::BrownianSheet2D);
  CHECK(sampling_mode_from_string("projection") == SamplingMode::L2ProjectionOfTruncatedKL);
  CHECK_THROWS(field_kind_from_string("wiener"));
}
