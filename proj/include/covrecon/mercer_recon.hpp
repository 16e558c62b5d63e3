#ifndef COVRECON_MERCER_RECON_HPP
#define COVRECON_MERCER_RECON_HPP

#include <string>

#include "covrecon/fem_grid.hpp"
#include "covrecon/field_sampler.hpp"
#include "covrecon/spectral.hpp"
#include "covrecon/types.hpp"

namespace covrecon {

/// Truncated Mercer kernel sum_{l <= L} lambda_l phi_l(x) phi_l(x') with
/// phi_l = Phi_l . theta.
struct MercerKernel {
  FeSpace space;
  Index rank = 0;
  Vector eigenvalues;  // L
  Matrix vectors;      // Q x L, generalized eigenvectors Phi_l
  SpectrumSource source = SpectrumSource::ExactDiscrete;
  std::string provenance;

  /// Coefficients in the theta_j (x) theta_k basis: Phi Lambda Phi^T.
  Matrix coefficient_matrix() const;
};

/// Keeps the top L pairs; throws std::invalid_argument unless 1 <= L <= Q.
MercerKernel build_kernel(const DiscreteSpectrum& spectrum, Index L, const FeSpace& space,
                          std::string provenance = {});

/// Throws std::invalid_argument for points outside the closed unit cube.
double eval(const MercerKernel& kernel, const Point& x, const Point& y);

/// Kernel values on all pairs of the given points (rows of `points`).
Matrix kernel_snapshot(const MercerKernel& kernel, const Matrix& points);

/// Regular grid with g points per axis in [0,1]^d, lexicographic.
Matrix regular_grid(int dim, int g);

/// Truncation error (sum_{l > L} lambda_l^2)^(1/2) of the oracle.
double truncation_error(const KlOracle& oracle, Index L);

struct ErrorReport {
  Index rank = 0;
  int q = 2;
  double e1 = 0.0;     // ||R - R^L||
  double e2 = 0.0;     // ||R^L - R^{(L;h)}||
  double e3 = 0.0;     // ||R^{(L;h)} - R^{(L;h;M)}||
  double total = 0.0;  // ||R - R^{(L;h;M)}||
  double triangle_slack = 0.0;  // total - (e1 + e2 + e3)
  // Norms of the three parts of E3: eigenvalue error, and the two
  // eigenvector-error terms; e3_split is the norm of their sum.
  double e31 = 0.0;
  double e32 = 0.0;
  double e33 = 0.0;
  double e3_split = 0.0;
  bool split_reliable = true;  // no exact gap below 1e-8 lambda_1 among l <= L
};

/// Error split of the reconstruction from est_spec against the analytic
/// field. Spectra are sign-aligned before differencing; E1 is the closed
/// form tail, E2 and the total use the q-point composite rule, E3 is
/// computed exactly in the Phi~ coordinates.
ErrorReport error_decomposition(const AnalyticField& field, const KlOracle& oracle, const FeSpace& space,
                                const DiscreteSpectrum& exact_spec, const DiscreteSpectrum& est_spec,
                                Index L, int q = 2);

/// Brute-force ||R^{(L;h)} - R^{(L;h;M)}|| by the composite rule.
double e3_quadrature(const FeSpace& space, const DiscreteSpectrum& exact_spec,
                     const DiscreteSpectrum& est_spec, Index L, int q = 2);

}  // namespace covrecon

#endif  // COVRECON_MERCER_RECON_HPP
