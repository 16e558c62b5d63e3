#ifndef COVRECON_SPECTRAL_HPP
#define COVRECON_SPECTRAL_HPP

#include <string>
#include <utility>
#include <vector>

#include "covrecon/fem_grid.hpp"
#include "covrecon/field_sampler.hpp"
#include "covrecon/types.hpp"

namespace covrecon {

enum class SpectrumSource { ExactDiscrete, Estimated };

/// S~ = (L^G)^T Sigma L^G, stored symmetrized.
struct TransformedStiffness {
  Matrix matrix;
  SpectrumSource source = SpectrumSource::ExactDiscrete;
};

TransformedStiffness transform(const Matrix& cov, const MassMatrix& mass, SpectrumSource source);

/// Descending eigenpairs. Column l of tilde_vectors is Phi~_l, column l of
/// gen_vectors is Phi_l = (L^G)^{-T} Phi~_l, so Phi^T G Phi = I.
struct DiscreteSpectrum {
  Vector eigenvalues;
  Matrix tilde_vectors;
  Matrix gen_vectors;
  SpectrumSource source = SpectrumSource::ExactDiscrete;

  Index size() const { return eigenvalues.size(); }
};

/// Full symmetric eigensolve. Ties keep the solver's order; each Phi~_l has
/// its largest-magnitude component positive. On failure the matrix is
/// written to a file in the temp directory and NumericError names it.
DiscreteSpectrum eigensolve(const TransformedStiffness& ts, const MassMatrix& mass);

/// Flips target vectors so that Phi~_ref . Phi~_target >= 0 for each l.
DiscreteSpectrum align_signs(const DiscreteSpectrum& reference, const DiscreteSpectrum& target);

struct SpectralDiagnostics {
  double weyl_bound = 0.0;             // ||S~ - S~^M||_{2->2}
  Index weyl_comparisons = 0;
  Index weyl_violations = 0;
  Vector eigenvalue_deviation;         // |lambda^h_l - lambda^M_l|, l <= L
  Vector discrete_gaps;                // delta^{(h;M)}_l
  Vector continuous_gaps;              // delta_l from the oracle
  Vector gap_margins;                  // delta_l - (4 C1 h^{2s} / lambda_{l+1} + 4 ||S~ - S~^M||)
  std::vector<bool> gap_condition;     // per l
  bool gap_condition_ok = false;       // all l
  Index gap_theorem_checks = 0;        // l with the condition met
  Index gap_theorem_violations = 0;    // ... and delta^{(h;M)}_l < delta_l / 4
  Vector davis_kahan_ratio;            // ||S~ - S~^M|| / delta^{(h;M)}_l
  Vector eigenvector_distance;         // ||Phi~^h_l - Phi~^M_l|| after alignment
  std::pair<double, double> sandwich;  // lambda_min(G), lambda_max(G) times ||Sigma - Sigma^M||
  bool sandwich_ok = true;
};

/// Compares exact-discrete and estimated spectra for the leading L modes.
/// The gap condition uses calibration.c1, the smoothness s and the mesh width h.
SpectralDiagnostics diagnostics(const DiscreteSpectrum& exact, const DiscreteSpectrum& estimated,
                                const TransformedStiffness& s_exact, const TransformedStiffness& s_est,
                                const KlOracle& oracle, Index L, const Calibration& calibration,
                                double smoothness, double h);

/// Same, also checking the sandwich for the covariance difference.
SpectralDiagnostics diagnostics(const DiscreteSpectrum& exact, const DiscreteSpectrum& estimated,
                                const TransformedStiffness& s_exact, const TransformedStiffness& s_est,
                                const KlOracle& oracle, Index L, const Calibration& calibration,
                                double smoothness, double h, const MassMatrix& mass,
                                const Matrix& cov_diff);

/// [lambda_min(G) v, lambda_max(G) v].
std::pair<double, double> opnorm_sandwich(const MassMatrix& mass, double cov_diff_norm);

/// delta^{(h;M)}_l = min{|lambda^M_{l-1} - lambda^h_l|, |lambda^h_l - lambda^M_{l+1}|},
/// lambda^M_0 = inf, lambda^M_{Q+1} = -inf; l is 1-based.
double discrete_gap(const Vector& exact, const Vector& estimated, Index l);

}  // namespace covrecon

#endif  // COVRECON_SPECTRAL_HPP
