#ifndef COVRECON_COV_ESTIMATOR_HPP
#define COVRECON_COV_ESTIMATOR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "covrecon/field_sampler.hpp"
#include "covrecon/types.hpp"

namespace covrecon {

enum class EstimatorKind { MLE, Tapered };

std::string to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(const std::string& name);

/// Covariance estimate with its tapering metadata. tau = 0 when no taper
/// was applied.
struct TaperedCovariance {
  Matrix matrix;
  int tau = 0;
  double alpha = 0.0;
  EstimatorKind kind = EstimatorKind::MLE;
  Index sample_count = 0;
};

/// Row mean of an M x Q sample matrix.
Vector sample_mean(const Matrix& samples);
Vector sample_mean(const SampleBatch& batch);

/// (1/M) sum_m (K_m - mean)(K_m - mean)^T. Throws std::invalid_argument for M < 2.
TaperedCovariance mle_covariance(const Matrix& samples);
TaperedCovariance mle_covariance(const SampleBatch& batch);

/// 1 for |j-k| <= tau/2, 2(1 - |j-k|/tau) below tau, 0 beyond.
double tapering_weight(int tau, Index j, Index k);

/// Smallest even integer >= M^(1/(2 alpha + 1)), clamped to [2, Q]
/// (the upper clamp is the largest even integer <= Q). Returns 0 when
/// Q < M^(1/(2 alpha + 1)), meaning the MLE is used as is.
int tapering_width(Index sample_count, double alpha, Index dof_count);

/// Applies the rate-optimal taper to an MLE estimate.
TaperedCovariance taper(const TaperedCovariance& mle, double alpha);

/// Applies the taper with a given even width.
TaperedCovariance taper_with_width(const TaperedCovariance& mle, int tau, double alpha = 0.0);

/// Rate function of the covariance estimator; Q = (1/h + 1)^d.
double rho_tilde(double h, double sample_count, double alpha, int dim);
double rho_tilde_large_q(double h, double sample_count, double alpha, int dim);
double rho_tilde_small_q(double h, double sample_count, int dim);

struct DecayClassCheck {
  double alpha = 0.0;
  double c1_est = 0.0;
  double lambda_max = 0.0;
  bool passes = false;
  std::vector<double> tails;  // tails[c-1] = max_j sum_{|k-j|>c} |A_jk|
};

DecayClassCheck decay_class_check(const Matrix& a, double alpha, double c1, double c2);

struct SubgaussianDiagnostic {
  double rho_inv_nodal = 0.0;
};

/// 4 c_inf_hat^2 with c_inf_hat from moment_diagnostics.
SubgaussianDiagnostic subgaussian_diagnostic(const SampleBatch& batch);

/// Spectral norm of a symmetric matrix via a symmetric eigensolve.
double opnorm(const Matrix& symmetric);

/// Gaussian rows with covariance sigma; row m uses substream (seed, m).
Matrix gaussian_samples(const Matrix& sigma, Index sample_count, std::uint64_t seed);

/// Sigma_jk = (1 + |j-k|)^(-alpha-1).
Matrix synthetic_decay_covariance(Index dof_count, double alpha);

struct RateSample {
  Index sample_count = 0;
  int replication = 0;
  double error = 0.0;     // ||estimate - truth||_{2->2}
  double error_sq = 0.0;
};

/// Operator-norm error of the (tapered or raw) MLE against a known truth,
/// for every M and n_rep replications.
std::vector<RateSample> tapering_rate_study(const Matrix& truth, const std::vector<Index>& sample_counts,
                                            int n_rep, double alpha, EstimatorKind kind,
                                            std::uint64_t seed);

}  // namespace covrecon

#endif  // COVRECON_COV_ESTIMATOR_HPP
