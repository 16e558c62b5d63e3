#ifndef COVRECON_FIELD_SAMPLER_HPP
#define COVRECON_FIELD_SAMPLER_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "covrecon/fem_grid.hpp"
#include "covrecon/types.hpp"

namespace covrecon {

enum class FieldKind { BrownianMotion1D, BrownianSheet2D };

std::string to_string(FieldKind kind);
FieldKind field_kind_from_string(const std::string& name);

/// Centered Gaussian field with a closed-form covariance.
struct AnalyticField {
  FieldKind kind = FieldKind::BrownianMotion1D;
  int dim = 1;
  /// Sobolev smoothness of the paths, 1/2 - delta for Brownian fields.
  double smoothness = 0.5 - 1e-3;

  /// min(x, x') in 1D, min(x, x') min(y, y') in 2D.
  double covariance(const Point& x, const Point& y) const;
};

AnalyticField brownian_field(int dim, double smoothness_defect = 1e-3);

/// Exact Karhunen-Loeve data of the Brownian covariance in d = 1, 2.
///
/// Indices are 1-based. eigenvalue/eigenfunction/gap count multiplicities
/// (the 2D sheet has repeated eigenvalues, so some gaps are zero). The
/// level_* functions enumerate the distinct eigenvalues instead:
/// level k of the d-dimensional field is lambda_1(1)^(d-1) lambda_1(k).
class KlOracle {
 public:
  explicit KlOracle(int dim);

  int dim() const { return dim_; }

  double eigenvalue(Index l) const;
  double eigenfunction(Index l, const Point& x) const;
  /// min{lambda_{l-1} - lambda_l, lambda_l - lambda_{l+1}} with lambda_0 = inf.
  double gap(Index l) const;

  double level_eigenvalue(Index k) const;
  double level_gap(Index k) const;

  /// sum_l lambda_l^2 = ||R||^2_{L2(DxD)}.
  double squared_hs_norm() const;

  /// Number of modes available through eigenvalue(); unbounded in 1D.
  Index mode_limit() const;

  /// Tensor indices (l1, l2) of mode l; (l, 1) in 1D.
  std::pair<int, int> mode_indices(Index l) const;

  // Univariate closed forms.
  static double eigenvalue_1d(double l);
  static double gap_1d(double l);
  static double eigenfunction_1d(Index l, double x);

 private:
  int dim_;
  std::vector<std::pair<int, int>> modes_;  // 2D only, sorted by eigenvalue
};

KlOracle brownian_oracle(int dim);

enum class SamplingMode { NodalInterpolation, L2ProjectionOfTruncatedKL };

std::string to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(const std::string& name);

/// M discretized realizations; row m holds the coefficient vector K^(h)(omega_m).
struct SampleBatch {
  FeSpace space;
  Matrix coeffs;
  SamplingMode mode = SamplingMode::NodalInterpolation;
  int kl_trunc = 0;
  std::uint64_t seed = 0;
  FieldKind field = FieldKind::BrownianMotion1D;

  Index sample_count() const { return coeffs.rows(); }
};

/// Independent generator for replication `stream` of a run keyed by `seed`.
std::mt19937_64 make_substream(std::uint64_t seed, std::uint64_t stream);

/// Deterministic 64-bit key derived from a seed and a list of integers.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

/// Draws M realizations. Sample m uses substream (seed, m), so the result is
/// independent of the worker count.
SampleBatch draw_batch(const AnalyticField& field, const FeSpace& space, Index sample_count,
                       SamplingMode mode, std::uint64_t seed, int kl_trunc = 200,
                       int workers = 1);

/// Sigma_{jk} = R(x_j, x_k): the covariance of nodal-interpolation samples.
Matrix exact_discrete_covariance(const AnalyticField& field, const FeSpace& space);

struct MomentDiagnostics {
  double c_inf_hat = 0.0;     // sqrt(mean_m max_j |K_mj|^2)
  double mean_max_abs = 0.0;  // max_j |sample mean_j|
  bool centering_ok = true;   // mean_max_abs <= 3 c_inf_hat / sqrt(M)
};

MomentDiagnostics moment_diagnostics(const SampleBatch& batch);

}  // namespace covrecon

#endif  // COVRECON_FIELD_SAMPLER_HPP
