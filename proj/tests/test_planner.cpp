#include <doctest.h>

#include <cmath>

#include "covrecon/planner.hpp"

#ifdef COVRECON_HAVE_BOOST
#include <boost/multiprecision/cpp_bin_float.hpp>
#endif

using namespace covrecon;

TEST_CASE("truncation level") {
  CHECK(truncation_for(0.5, 0.5, 1) == 2);
  CHECK(truncation_for(0.1, 0.5, 1) == 5);
  CHECK(truncation_for(0.01, 0.5, 1) == 22);
  CHECK(truncation_for(0.1, 0.5, 2) == 10);  // 0.1^(-2/2)
}

TEST_CASE("G and H") {
  const SpectralProfile p = brownian_profile(1);
  CHECK(g_of_l(p, 1) * g_of_l(p, 1) == doctest::Approx(81.0 / 64.0).epsilon(1e-14));
  CHECK(g_of_l(p, 2) * g_of_l(p, 2) == doctest::Approx(949.0 / 256.0).epsilon(1e-14));
  // mpmath, 50 digits
  CHECK(g_of_l(p, 3) == doctest::Approx(2.8063203715502223068).epsilon(1e-13));
  CHECK(g_of_l(p, 5) == doctest::Approx(4.8407939008263693872).epsilon(1e-13));
  CHECK(h_of_l(p, 1) == doctest::Approx(5.6329120739008697883e-05).epsilon(1e-13));
  CHECK(h_of_l(p, 3) == doctest::Approx(2.7364550782998644403e-08).epsilon(1e-12));
  CHECK(h_of_l(p, 5) == doctest::Approx(1.1874551664699566388e-09).epsilon(1e-12));
}

TEST_CASE("success probability bound") {
  const SpectralProfile p = brownian_profile(1);
  CHECK(p0_bound(p, 33, 4, 3e5, 1) == doctest::Approx(0.99811028608660073566).epsilon(1e-12));
  CHECK(p0_bound(p, 33, 4, 2e5, 1) == doctest::Approx(0.47187261031780644865).epsilon(1e-11));
  CHECK(p0_bound(p, 65, 6, 1e6, 3) == 0.0);
  CHECK(p0_bound(p, 33, 4, 1e9, 1) == 1.0);
  CHECK(p0_bound(p, 65, 6, 4.2e7, 2) == doctest::Approx(0.46049635043276423543).epsilon(1e-12));
  CHECK(p0_bound(p, 65, 6, 5e7, 2) == doctest::Approx(0.96983752604203824637).epsilon(1e-12));
  CHECK(p0_bound(p, 65, 6, 0.0, 2) == 0.0);
  CHECK(p0_bound(p, 65, 6, 5e7, 2) > p0_bound(p, 65, 6, 4.2e7, 2));
  CHECK(p0_bound(p, 65, 8, 5e7, 2) < p0_bound(p, 65, 6, 5e7, 2));
  CHECK(p0_bound(p, 129, 6, 5e7, 2) < p0_bound(p, 65, 6, 5e7, 2));
#ifdef COVRECON_HAVE_BOOST
  using big = boost::multiprecision::cpp_bin_float_50;
  const big pi = boost::math::constants::pi<big>();
  auto lam = [&](int l) { return big(1) / (pi * pi * (big(l) - big(0.5)) * (big(l) - big(0.5))); };
  for (double m : {2.2e5, 2.6e5, 4e5}) {
    const big delta = lam(1) - lam(2);
    const big v = 1 - 2 * big(33) * boost::multiprecision::pow(big(5), 4) *
                          boost::multiprecision::exp(-big(m) * (delta / 48) * (delta / 48));
    CHECK(p0_bound(p, 33, 4, m, 1) == doctest::Approx(static_cast<double>(v)).epsilon(1e-11));
  }
#endif
}

TEST_CASE("G nondecreasing and H nonincreasing in L") {
  const SpectralProfile p = brownian_profile(1);
  for (Index L = 1; L < 40; ++L) {
    CHECK(g_of_l(p, L + 1) >= g_of_l(p, L));
    CHECK(h_of_l(p, L + 1) <= h_of_l(p, L));
    CHECK(h_of_l(p, L) <= std::pow(p.delta(L) / 48.0, 2) + 1e-12);
  }
}

TEST_CASE("distinct levels and degenerate gaps") {
  SpectralProfile p = brownian_profile(2);
  CHECK(p.delta(2) > 0.0);
  p.distinct_levels = false;
  CHECK_THROWS_AS(p.delta(2), DegenerateSpectrum);
  CHECK_THROWS_AS(g_of_l(p, 3), DegenerateSpectrum);
}

TEST_CASE("gap budget") {
  SpectralProfile p = brownian_profile(1);
  p.calibration.c1 = 1e-3;
  CHECK_THROWS_AS(check_gap_condition(p, 3, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(check_gap_condition(p, 3, 0.75, 0.0), std::invalid_argument);
  const GapBudget ok = check_gap_condition(p, 1, 1.0 / 64, 0.0);
  CHECK(ok.gap_condition_ok);
  CHECK(ok.margins.size() == 1);
  const GapBudget bad = check_gap_condition(p, 1, 1.0 / 64, 1.0);
  CHECK_FALSE(bad.gap_condition_ok);
  const GapBudget b = gap_budget(p, 1, 1.0 / 32, 0.0, 33, 4, 3e5);
  CHECK(b.p0 == doctest::Approx(p0_bound(p, 33, 4, 3e5, 1)));
}

TEST_CASE("first_true search") {
  CHECK(first_true([](std::uint64_t m) { return m >= 1; }) == 1u);
  CHECK(first_true([](std::uint64_t m) { return m >= 12345678901ull; }) == 12345678901ull);
  CHECK_FALSE(first_true([](std::uint64_t) { return false; }, 1024).has_value());
}

TEST_CASE("thresholds against root-finding references") {
  const SpectralProfile p = brownian_profile(1);
  // mpmath findroot on the same inequalities
  const ThresholdPredicates t5 = threshold_predicates(p, 0.1, 5);
  CHECK(first_true(t5.m_bar) == 9052472556ull);
  CHECK(first_true(t5.m_tilde) == 9052472556ull);
  CHECK(first_true(t5.m_prime) == 24442403781971ull);
  CHECK(first_true(t5.m_hat) == 1ull);
  const ThresholdPredicates t3 = threshold_predicates(p, 0.2, 3);
  CHECK(first_true(t3.m_bar) == 317341481ull);
  CHECK(first_true(t3.m_prime) == 221029410305ull);
}

TEST_CASE("Lambert W lower branch") {
  CHECK(lambert_w_minus1(-0.1) == doctest::Approx(-3.5771520639572971414).epsilon(1e-13));
  CHECK(lambert_w_minus1(-1e-6) == doctest::Approx(-16.626508901372473388).epsilon(1e-13));
  CHECK(lambert_w_minus1(-std::exp(-1.0)) == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK_THROWS_AS(lambert_w_minus1(0.1), std::domain_error);
  const SpectralProfile p = brownian_profile(1);
  CHECK(*m_tilde_lambert(p, 0.1, 5) == doctest::Approx(9052472555.3438291644).epsilon(1e-9));
  CHECK(*m_tilde_lambert(p, 0.2, 3) == doctest::Approx(317341480.14308558343).epsilon(1e-9));
}

TEST_CASE("plans") {
  const SpectralProfile p = brownian_profile(1);
  const std::vector<PlanResult> all = plan_all(p, 0.1);
  REQUIRE(all.size() == 3);
  for (const PlanResult& r : all) {
    CHECK(r.L == 5);
    CHECK(r.feasible);
    CHECK(r.M >= 1.0);
    CHECK(r.h > 0.0);
    CHECK(r.h <= p.calibration.h0);
    CHECK(r.h_lower <= r.h_upper);
  }
  const PlanResult best = plan(p, 0.1);
  for (const PlanResult& r : all) CHECK(best.M <= r.M);
  CHECK(plan(p, 0.1, Regime::SmallQh).regime == Regime::SmallQh);
  const std::string text = serialize(best);
  CHECK(text.find("L_eps = 5") != std::string::npos);
  CHECK(text.find("binding = ") != std::string::npos);
  CHECK_THROWS_AS(plan(p, 1.5), std::invalid_argument);
  const PlanResult log_case = plan(p, 0.1, Regime::LargeQhLogDominated);
  std::uint64_t searched = 0;
  for (const Threshold& t : log_case.thresholds) {
    if (t.name == "M_tilde") searched = t.value;
  }
  CHECK(std::abs(log_case.m_lambert - static_cast<double>(searched)) <= 1.0);
  CHECK(text.find("check.c2_condition") != std::string::npos);
  const PlanResult tiny = plan(p, 1e-6);
  CHECK_FALSE(tiny.feasible);
  CHECK_FALSE(tiny.reason.empty());
}

TEST_CASE("plans are monotone in epsilon") {
  const SpectralProfile p = brownian_profile(1);
  for (Regime regime : {Regime::SmallQh, Regime::LargeQhLogDominated, Regime::LargeQhRateDominated}) {
    PlanResult prev = plan(p, 0.8, regime);
    for (double eps : {0.4, 0.2, 0.1, 0.05}) {
      const PlanResult cur = plan(p, eps, regime);
      CHECK(cur.L >= prev.L);
      if (cur.feasible && prev.feasible) CHECK(cur.M >= prev.M);
      prev = cur;
    }
  }
}
