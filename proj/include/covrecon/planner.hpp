#ifndef COVRECON_PLANNER_HPP
#define COVRECON_PLANNER_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "covrecon/field_sampler.hpp"
#include "covrecon/types.hpp"

namespace covrecon {

/// Spectral and model data the a-priori rules need.
///
/// With distinct_levels set, lambda_l and delta_l are the distinct
/// eigenvalues of the oracle (level_eigenvalue / level_gap); otherwise they
/// count multiplicities and a zero gap raises DegenerateSpectrum.
struct SpectralProfile {
  KlOracle oracle{1};
  double s = 0.5 - 1e-3;
  int d = 1;
  double alpha = 1.0;
  double gamma = 1.5;  // L^(1/2) + G(L) <~ L^gamma
  double beta = 0.1;
  bool distinct_levels = true;
  Calibration calibration;

  double lambda(Index l) const;
  double delta(Index l) const;
};

SpectralProfile brownian_profile(int dim, double alpha = 1.0, double smoothness = 0.5 - 1e-3);

/// G(L) = (sum_{l <= L} (lambda_l / delta_l)^2)^(1/2).
double g_of_l(const SpectralProfile& profile, Index L);

/// H(L) = (min_{l <= L} delta_l / 48)^2.
double h_of_l(const SpectralProfile& profile, Index L);

/// 1 - 2 Q 5^tau exp(-M rho1 (min_{l<=L} delta_l / (48 lambda_max(G)))^2), in [0,1].
double p0_bound(const SpectralProfile& profile, double dof_count, int tau, double sample_count, Index L);

struct GapBudget {
  double g = 0.0;
  double h = 0.0;
  double p0 = -1.0;  // set by gap_budget only
  std::vector<double> margins;  // delta_l - (4 C1 h^{2s} / lambda_{l+1} + 4 ||S~ - S~^M||)
  bool gap_condition_ok = false;
};

GapBudget check_gap_condition(const SpectralProfile& profile, Index L, double h, double stiffness_diff_norm);

/// check_gap_condition plus p0 for the given Q, tau and M.
GapBudget gap_budget(const SpectralProfile& profile, Index L, double h, double stiffness_diff_norm,
                     double dof_count, int tau, double sample_count);

enum class Regime { SmallQh = 1, LargeQhLogDominated = 2, LargeQhRateDominated = 3 };

std::string to_string(Regime regime);

/// L_eps = ceil(eps^(-2d/(4s+d))).
Index truncation_for(double epsilon, double s, int d);

struct Threshold {
  std::string name;
  std::uint64_t value = 0;
  bool exact = true;  // false when the search hit the 2^62 cap
};

struct PlanResult {
  double epsilon = 0.0;
  Regime regime = Regime::LargeQhLogDominated;
  Index L = 0;
  double M = 0.0;
  double h = 0.0;
  double h_lower = 0.0;
  double h_upper = 0.0;
  bool has_interval = false;
  std::vector<Threshold> thresholds;
  std::vector<std::string> binding;  // constraints attaining the max for M and the min for h
  bool feasible = true;
  std::string reason;
  double g = 0.0;
  double h_of_l = 0.0;
  double m_lambert = 0.0;  // ceil of the Lambert-W root for M~, 0 if none
  // C2 h^s / lambda_L <= 1 at the planned h; depends on the calibrated C2
  // and does not affect feasibility
  double c2_ratio = 0.0;
  bool c2_condition = false;
};

/// Plans (L, M, h). Without an override every regime is evaluated and the
/// feasible one with the smallest M wins, ties going to LargeQhLogDominated.
PlanResult plan(const SpectralProfile& profile, double epsilon, std::optional<Regime> regime = std::nullopt);

/// All three regimes, in order.
std::vector<PlanResult> plan_all(const SpectralProfile& profile, double epsilon);

/// key = value lines naming every threshold and binding constraint.
std::string serialize(const PlanResult& plan);

/// Smallest M >= 1 with pred(M); pred must be false-then-true on [1, inf).
/// Checks 1, then doubles, then bisects. Returns nullopt past the cap.
std::optional<std::uint64_t> first_true(const std::function<bool(std::uint64_t)>& pred,
                                        std::uint64_t cap = std::uint64_t{1} << 62);

/// Defining inequalities of the thresholds, as predicates in M.
struct ThresholdPredicates {
  std::function<bool(std::uint64_t)> m_bar;
  std::function<bool(std::uint64_t)> m_tilde;
  std::function<bool(std::uint64_t)> m_hat;
  std::function<bool(std::uint64_t)> m_prime;
  // nonempty h interval, regimes 2 and 3
  std::function<bool(std::uint64_t)> m_interval_log;
  std::function<bool(std::uint64_t)> m_interval_rate;
};

/// min{H(L)^(1/(4s)) lambda_{L+1}^(1/(2s)), lambda_L^(1/s)}: the largest h
/// the gap budget admits.
double gap_budget_mesh_width(const SpectralProfile& profile, Index L);

ThresholdPredicates threshold_predicates(const SpectralProfile& profile, double epsilon, Index L);

/// Lower branch W_{-1}(z) for z in [-1/e, 0), by bisection.
double lambert_w_minus1(double z);

/// Root of L^(1/2) eps^-1 exp(-M rho1 H) = M^(-1/(2 alpha + 1)) on the W_{-1}
/// branch; nullopt when the inequality holds for every M.
std::optional<double> m_tilde_lambert(const SpectralProfile& profile, double epsilon, Index L);

}  // namespace covrecon

#endif  // COVRECON_PLANNER_HPP
