#include "covrecon/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace covrecon {

double SpectralProfile::lambda(Index l) const {
  return distinct_levels ? oracle.level_eigenvalue(l) : oracle.eigenvalue(l);
}

double SpectralProfile::delta(Index l) const {
  const double g = distinct_levels ? oracle.level_gap(l) : oracle.gap(l);
  if (!(g > 0.0)) {
    throw DegenerateSpectrum("spectral gap delta_" + std::to_string(l) + " is zero");
  }
  return g;
}

SpectralProfile brownian_profile(int dim, double alpha, double smoothness) {
  SpectralProfile p;
  p.oracle = brownian_oracle(dim);
  p.d = dim;
  p.s = smoothness;
  p.alpha = alpha;
  p.gamma = 1.5;
  return p;
}

double g_of_l(const SpectralProfile& profile, Index L) {
  if (L < 1) {
    throw std::invalid_argument("g_of_l: L must be >= 1");
  }
  double sum = 0.0;
  for (Index l = 1; l <= L; ++l) {
    const double r = profile.lambda(l) / profile.delta(l);
    sum += r * r;
  }
  return std::sqrt(sum);
}

namespace {

double min_gap(const SpectralProfile& profile, Index L) {
  double m = std::numeric_limits<double>::infinity();
  for (Index l = 1; l <= L; ++l) {
    m = std::min(m, profile.delta(l));
  }
  return m;
}

}  // namespace

double h_of_l(const SpectralProfile& profile, Index L) {
  if (L < 1) {
    throw std::invalid_argument("h_of_l: L must be >= 1");
  }
  const double m = min_gap(profile, L) / 48.0;
  return m * m;
}

double p0_bound(const SpectralProfile& profile, double dof_count, int tau, double sample_count, Index L) {
  const double scaled = min_gap(profile, L) / (48.0 * profile.calibration.lambda_max_mass);
  const long double log_fail = std::log(2.0L * dof_count) + tau * std::log(5.0L) -
                               static_cast<long double>(sample_count) * profile.calibration.rho1 *
                                   scaled * scaled;
  if (log_fail >= 0.0L) {
    return 0.0;
  }
  return std::clamp(static_cast<double>(-std::expm1(log_fail)), 0.0, 1.0);
}

GapBudget check_gap_condition(const SpectralProfile& profile, Index L, double h, double stiffness_diff_norm) {
  if (!(h > 0.0) || h > profile.calibration.h0) {
    throw std::invalid_argument("check_gap_condition: h must lie in (0, h0]");
  }
  GapBudget b;
  b.g = g_of_l(profile, L);
  b.h = h_of_l(profile, L);
  b.gap_condition_ok = true;
  const double mesh_term = 4.0 * profile.calibration.c1 * std::pow(h, 2.0 * profile.s);
  for (Index l = 1; l <= L; ++l) {
    const double margin = profile.delta(l) - (mesh_term / profile.lambda(l + 1) + 4.0 * stiffness_diff_norm);
    b.margins.push_back(margin);
    b.gap_condition_ok = b.gap_condition_ok && margin >= 0.0;
  }
  return b;
}

GapBudget gap_budget(const SpectralProfile& profile, Index L, double h, double stiffness_diff_norm,
                     double dof_count, int tau, double sample_count) {
  GapBudget b = check_gap_condition(profile, L, h, stiffness_diff_norm);
  b.p0 = p0_bound(profile, dof_count, tau, sample_count, L);
  return b;
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::SmallQh:
      return "SmallQh";
    case Regime::LargeQhLogDominated:
      return "LargeQhLogDominated";
    case Regime::LargeQhRateDominated:
      return "LargeQhRateDominated";
  }
  return "unknown";
}

Index truncation_for(double epsilon, double s, int d) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("truncation_for: epsilon must lie in (0, 1)");
  }
  const double raw = std::pow(epsilon, -2.0 * d / (4.0 * s + d));
  const double nearest = std::round(raw);
  if (std::abs(raw - nearest) <= 1e-9 * raw) {
    return static_cast<Index>(nearest);
  }
  return static_cast<Index>(std::ceil(raw));
}

std::optional<std::uint64_t> first_true(const std::function<bool(std::uint64_t)>& pred, std::uint64_t cap) {
  if (pred(1)) {
    return 1;
  }
  std::uint64_t lo = 1;
  std::uint64_t hi = 2;
  while (!pred(hi)) {
    lo = hi;
    if (hi > cap / 2) {
      return std::nullopt;
    }
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (pred(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

namespace {

struct Constants {
  long double k;  // log(L^(1/2) / eps)
  long double c;  // rho1 H(L) / lambda_max(G)^2
  long double p;  // 2 alpha + 1
  long double d;
};

Constants constants(const SpectralProfile& profile, double epsilon, Index L) {
  const long double lm = profile.calibration.lambda_max_mass;
  return {0.5L * std::log(static_cast<long double>(L)) - std::log(static_cast<long double>(epsilon)),
          profile.calibration.rho1 * static_cast<long double>(h_of_l(profile, L)) / (lm * lm),
          2.0L * profile.alpha + 1.0L, static_cast<long double>(profile.d)};
}

}  // namespace

ThresholdPredicates threshold_predicates(const SpectralProfile& profile, double epsilon, Index L) {
  const Constants k = constants(profile, epsilon, L);
  ThresholdPredicates t;
  // exp(-M c) <= eps L^(-1/2) M^(-1/p)
  t.m_bar = [k](std::uint64_t m) {
    const long double lm = static_cast<long double>(m);
    return -k.c * lm <= -k.k - std::log(lm) / k.p;
  };
  // L^(1/2) eps^-1 exp(-M c) <= M^(-1/p)
  t.m_tilde = [k](std::uint64_t m) {
    const long double lm = static_cast<long double>(m);
    return k.k - k.c * lm <= -std::log(lm) / k.p;
  };
  // exp(-M^(1/p) / d) <= M^(-1/(d p))
  t.m_hat = [k](std::uint64_t m) {
    const long double lm = static_cast<long double>(m);
    return -std::pow(lm, 1.0L / k.p) / k.d <= -std::log(lm) / (k.d * k.p);
  };
  // (L^(1/2) eps^-1 exp(-M c))^(1/d) <= exp(-M^(1/p) / d)
  t.m_prime = [k](std::uint64_t m) {
    const long double lm = static_cast<long double>(m);
    return (k.k - k.c * lm) / k.d <= -std::pow(lm, 1.0L / k.p) / k.d;
  };
  const long double log_hub = std::log(static_cast<long double>(gap_budget_mesh_width(profile, L)));
  const long double log_h0 = std::log(static_cast<long double>(profile.calibration.h0));
  auto log_upper = [k, log_hub, log_h0](long double m) {
    return std::min({log_hub, -std::log(m) / (k.d * k.p), log_h0});
  };
  // (L^(1/2) eps^-1 exp(-M c))^(1/d) <= min{hub, M^(-1/(d p)), h0}
  t.m_interval_log = [k, log_upper](std::uint64_t m) {
    const long double lm = static_cast<long double>(m);
    return (k.k - k.c * lm) / k.d <= log_upper(lm);
  };
  // max{(L^(1/2) eps^-1 exp(-M c))^(1/d), exp(-M^(1/p) / d)} <= min{hub, M^(-1/(d p)), h0}
  t.m_interval_rate = [k, log_upper](std::uint64_t m) {
    const long double lm = static_cast<long double>(m);
    return std::max((k.k - k.c * lm) / k.d, -std::pow(lm, 1.0L / k.p) / k.d) <= log_upper(lm);
  };
  return t;
}

double gap_budget_mesh_width(const SpectralProfile& profile, Index L) {
  const double s = profile.s;
  return std::min(std::pow(h_of_l(profile, L), 1.0 / (4.0 * s)) * std::pow(profile.lambda(L + 1), 1.0 / (2.0 * s)),
                  std::pow(profile.lambda(L), 1.0 / s));
}

double lambert_w_minus1(double z) {
  const double e_inv = std::exp(-1.0);
  if (!(z >= -e_inv && z < 0.0)) {
    throw std::domain_error("lambert_w_minus1: z must lie in [-1/e, 0)");
  }
  // w e^w = z  <=>  log(-w) + w = log(-z), increasing in w on (-inf, -1]
  const double target = std::log(-z);
  auto f = [](double w) { return std::log(-w) + w; };
  double hi = -1.0;
  double lo = -2.0;
  while (f(lo) > target) {
    lo *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::abs(lo); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::optional<double> m_tilde_lambert(const SpectralProfile& profile, double epsilon, Index L) {
  const Constants k = constants(profile, epsilon, L);
  // M exp(-p c M) = A^(-p)  =>  M = -W_{-1}(-p c A^(-p)) / (p c)
  const long double log_z = std::log(k.p * k.c) - k.p * k.k;
  const long double z = -std::exp(log_z);
  if (z < -std::exp(-1.0L)) {
    return std::nullopt;
  }
  const double w = lambert_w_minus1(static_cast<double>(z));
  return static_cast<double>(-w / (k.p * k.c));
}

namespace {

double ceil_guarded(double x) {
  const double r = std::round(x);
  return std::abs(x - r) <= 1e-9 * std::abs(x) ? r : std::ceil(x);
}

struct Term {
  std::string name;
  double value;
};

// Largest term, and every term attaining it.
std::pair<double, std::vector<std::string>> max_terms(const std::vector<Term>& terms) {
  double best = 0.0;
  for (const auto& t : terms) {
    best = std::max(best, t.value);
  }
  std::vector<std::string> names;
  for (const auto& t : terms) {
    if (t.value == best) {
      names.push_back(t.name);
    }
  }
  return {best, names};
}

std::pair<double, std::vector<std::string>> min_terms(const std::vector<Term>& terms) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : terms) {
    best = std::min(best, t.value);
  }
  std::vector<std::string> names;
  for (const auto& t : terms) {
    if (t.value == best) {
      names.push_back(t.name);
    }
  }
  return {best, names};
}

void add_threshold(PlanResult& r, const std::string& name, const std::optional<std::uint64_t>& v,
                   std::vector<Term>& terms) {
  if (v) {
    r.thresholds.push_back({name, *v, true});
    terms.push_back({name, static_cast<double>(*v)});
  } else {
    r.thresholds.push_back({name, std::uint64_t{1} << 62, false});
    r.feasible = false;
    r.reason = name + " exceeds the search cap 2^62";
    terms.push_back({name, std::numeric_limits<double>::infinity()});
  }
}

PlanResult plan_case(const SpectralProfile& profile, double epsilon, Regime regime) {
  PlanResult r;
  r.epsilon = epsilon;
  r.regime = regime;
  r.L = truncation_for(epsilon, profile.s, profile.d);
  const Index L = r.L;
  const double s = profile.s;
  const double d = profile.d;
  const double p = 2.0 * profile.alpha + 1.0;
  const double h0 = profile.calibration.h0;
  r.g = g_of_l(profile, L);
  r.h_of_l = h_of_l(profile, L);
  const double hub = gap_budget_mesh_width(profile, L);
  const ThresholdPredicates pred = threshold_predicates(profile, epsilon, L);
  const Constants k = constants(profile, epsilon, L);
  if (auto root = m_tilde_lambert(profile, epsilon, L)) {
    r.m_lambert = std::ceil(*root);
  }
  const double rate_term = std::pow(epsilon, -p / profile.alpha) * std::pow(static_cast<double>(L), profile.gamma * p / profile.alpha);
  const double hub_term = std::pow(hub, -d * p);

  // log of the lower h bound from the third error term
  auto log_lower_third = [k](long double m) { return (k.k - k.c * m) / k.d; };

  std::vector<Term> m_terms;
  if (regime == Regime::SmallQh) {
    add_threshold(r, "M_bar", first_true(pred.m_bar), m_terms);
    m_terms.push_back({"rate", ceil_guarded(rate_term)});
    m_terms.push_back({"mesh_gap", ceil_guarded(hub_term)});
    const auto [m, names] = max_terms(m_terms);
    r.M = m;
    for (const auto& n : names) {
      r.binding.push_back("M:" + n);
    }
    const double hm = std::pow(r.M, -1.0 / (d * p));
    r.h = std::min(hm, h0);
    r.binding.push_back(hm <= h0 ? "h:M^(-1/(d(2alpha+1)))" : "h:h0");
    r.h_upper = r.h;
    r.h_lower = r.h;
  } else {
    if (regime == Regime::LargeQhLogDominated) {
      add_threshold(r, "M_tilde", first_true(pred.m_tilde), m_terms);
      const double expo = (2.0 * (2.0 * s + d) * profile.beta + 2.0 * s * d * profile.gamma) / (s * d);
      m_terms.push_back({"rate", ceil_guarded(std::pow(static_cast<double>(L), expo) * std::pow(epsilon, -2.0))});
      add_threshold(r, "M_interval", first_true(pred.m_interval_log), m_terms);
    } else {
      add_threshold(r, "M_hat", first_true(pred.m_hat), m_terms);
      add_threshold(r, "M_prime", first_true(pred.m_prime), m_terms);
      m_terms.push_back({"rate", ceil_guarded(rate_term)});
      m_terms.push_back({"mesh_gap", ceil_guarded(hub_term)});
      add_threshold(r, "M_interval", first_true(pred.m_interval_rate), m_terms);
    }
    const auto [m, names] = max_terms(m_terms);
    r.M = m;
    for (const auto& n : names) {
      r.binding.push_back("M:" + n);
    }
    r.has_interval = true;
    const long double lm = static_cast<long double>(r.M);
    std::vector<Term> lower_terms{{"third_error", static_cast<double>(std::exp(log_lower_third(lm)))}};
    if (regime == Regime::LargeQhRateDominated) {
      lower_terms.push_back({"rate_dominance", static_cast<double>(std::exp(-std::pow(lm, 1.0L / k.p) / k.d))});
    }
    const auto [lower, lower_names] = max_terms(lower_terms);
    const auto [upper, upper_names] = min_terms({{"gap_budget", hub},
                                                 {"M^(-1/(d(2alpha+1)))", std::pow(r.M, -1.0 / (d * p))},
                                                 {"h0", h0}});
    r.h_lower = lower;
    r.h_upper = upper;
    r.h = upper;
    for (const auto& n : lower_names) {
      r.binding.push_back("h_lower:" + n);
    }
    for (const auto& n : upper_names) {
      r.binding.push_back("h_upper:" + n);
    }
    if (r.feasible && !(lower <= upper)) {
      r.feasible = false;
      r.reason = "empty h interval: " + lower_names.front() + " lower bound exceeds " + upper_names.front();
    }
  }
  r.c2_ratio = profile.calibration.c2 * std::pow(r.h, s) / profile.lambda(L);
  r.c2_condition = r.c2_ratio <= 1.0;
  if (r.feasible && !std::isfinite(r.M)) {
    r.feasible = false;
    r.reason = "M is not finite in double precision";
  }
  return r;
}

}  // namespace

std::vector<PlanResult> plan_all(const SpectralProfile& profile, double epsilon) {
  return {plan_case(profile, epsilon, Regime::SmallQh), plan_case(profile, epsilon, Regime::LargeQhLogDominated),
          plan_case(profile, epsilon, Regime::LargeQhRateDominated)};
}

PlanResult plan(const SpectralProfile& profile, double epsilon, std::optional<Regime> regime) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("plan: epsilon must lie in (0, 1)");
  }
  if (regime) {
    return plan_case(profile, epsilon, *regime);
  }
  const std::vector<PlanResult> all = plan_all(profile, epsilon);
  // preference order on ties: case 2, case 1, case 3
  const PlanResult* best = nullptr;
  for (int idx : {1, 0, 2}) {
    const PlanResult& c = all[static_cast<std::size_t>(idx)];
    if (c.feasible && (best == nullptr || c.M < best->M)) {
      best = &c;
    }
  }
  if (best == nullptr) {
    PlanResult r = all[1];
    r.reason = "no regime feasible; case 2: " + all[1].reason;
    return r;
  }
  return *best;
}

std::string serialize(const PlanResult& plan) {
  std::ostringstream out;
  out.precision(17);
  out << "epsilon = " << plan.epsilon << '\n';
  out << "regime = " << to_string(plan.regime) << '\n';
  out << "regime_index = " << static_cast<int>(plan.regime) << '\n';
  out << "feasible = " << (plan.feasible ? "true" : "false") << '\n';
  if (!plan.reason.empty()) {
    out << "reason = " << plan.reason << '\n';
  }
  out << "L_eps = " << plan.L << '\n';
  out << "M_eps = " << plan.M << '\n';
  out << "h_eps = " << plan.h << '\n';
  if (plan.has_interval) {
    out << "h_lower = " << plan.h_lower << '\n';
    out << "h_upper = " << plan.h_upper << '\n';
  }
  out << "G_of_L = " << plan.g << '\n';
  out << "H_of_L = " << plan.h_of_l << '\n';
  for (const auto& t : plan.thresholds) {
    out << "threshold." << t.name << " = " << t.value << (t.exact ? "" : " (capped)") << '\n';
  }
  if (plan.m_lambert > 0.0) {
    out << "lambert.M_tilde = " << plan.m_lambert << '\n';
  }
  out << "check.c2_condition = " << (plan.c2_condition ? "true" : "false") << " (ratio " << plan.c2_ratio
      << ", calibration-dependent)\n";
  for (const auto& b : plan.binding) {
    out << "binding = " << b << '\n';
  }
  return out.str();
}

}  // namespace covrecon
