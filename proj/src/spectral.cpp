#include "covrecon/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "covrecon/cov_estimator.hpp"

namespace covrecon {

TransformedStiffness transform(const Matrix& cov, const MassMatrix& mass, SpectrumSource source) {
  if (cov.rows() != cov.cols() || cov.rows() != mass.size()) {
    throw std::invalid_argument("transform: covariance is " + std::to_string(cov.rows()) + "x" +
                                std::to_string(cov.cols()) + ", mass matrix has size " +
                                std::to_string(mass.size()));
  }
  const Matrix t = mass.chol.transpose() * cov * mass.chol;
  return {0.5 * (t + t.transpose()), source};
}

namespace {

std::string dump_matrix(const Matrix& a) {
  const auto path = std::filesystem::temp_directory_path() / "covrecon_eigensolve_failure.txt";
  std::ofstream out(path);
  out.precision(17);
  out << a.rows() << ' ' << a.cols() << '\n' << a << '\n';
  return path.string();
}

}  // namespace

DiscreteSpectrum eigensolve(const TransformedStiffness& ts, const MassMatrix& mass) {
  const Index q = ts.matrix.rows();
  if (q != ts.matrix.cols() || q != mass.size()) {
    throw std::invalid_argument("eigensolve: dimension mismatch");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(ts.matrix);
  if (eig.info() != Eigen::Success) {
    throw NumericError("eigensolve: no convergence; matrix written to " + dump_matrix(ts.matrix));
  }
  std::vector<Index> order(static_cast<std::size_t>(q));
  std::iota(order.begin(), order.end(), Index{0});
  const Vector& values = eig.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values[a] > values[b]; });

  DiscreteSpectrum spectrum;
  spectrum.source = ts.source;
  spectrum.eigenvalues.resize(q);
  spectrum.tilde_vectors.resize(q, q);
  for (Index l = 0; l < q; ++l) {
    const Index src = order[static_cast<std::size_t>(l)];
    spectrum.eigenvalues[l] = values[src];
    Vector v = eig.eigenvectors().col(src);
    Index at = 0;
    v.cwiseAbs().maxCoeff(&at);
    if (v[at] < 0.0) {
      v = -v;
    }
    spectrum.tilde_vectors.col(l) = v;
  }
  spectrum.gen_vectors = mass.chol.transpose().triangularView<Eigen::Upper>().solve(spectrum.tilde_vectors);
  return spectrum;
}

DiscreteSpectrum align_signs(const DiscreteSpectrum& reference, const DiscreteSpectrum& target) {
  if (reference.size() != target.size()) {
    throw std::invalid_argument("align_signs: spectra have different sizes");
  }
  DiscreteSpectrum out = target;
  for (Index l = 0; l < out.size(); ++l) {
    if (reference.tilde_vectors.col(l).dot(out.tilde_vectors.col(l)) < 0.0) {
      out.tilde_vectors.col(l) *= -1.0;
      out.gen_vectors.col(l) *= -1.0;
    }
  }
  return out;
}

double discrete_gap(const Vector& exact, const Vector& estimated, Index l) {
  const Index q = estimated.size();
  const double inf = std::numeric_limits<double>::infinity();
  const double lam = exact[l - 1];
  const double prev = l >= 2 ? estimated[l - 2] : inf;
  const double next = l + 1 <= q ? estimated[l] : -inf;
  return std::min(std::abs(prev - lam), std::abs(lam - next));
}

std::pair<double, double> opnorm_sandwich(const MassMatrix& mass, double cov_diff_norm) {
  if (cov_diff_norm < 0.0) {
    throw std::invalid_argument("opnorm_sandwich: norm must be nonnegative");
  }
  return {mass.lambda_min * cov_diff_norm, mass.lambda_max * cov_diff_norm};
}

SpectralDiagnostics diagnostics(const DiscreteSpectrum& exact, const DiscreteSpectrum& estimated,
                                const TransformedStiffness& s_exact, const TransformedStiffness& s_est,
                                const KlOracle& oracle, Index L, const Calibration& calibration,
                                double smoothness, double h) {
  const Index q = exact.size();
  if (estimated.size() != q || L < 1 || L > q) {
    throw std::invalid_argument("diagnostics: need matching spectra and 1 <= L <= Q");
  }
  SpectralDiagnostics d;
  d.weyl_bound = opnorm(s_exact.matrix - s_est.matrix);
  const double tol = 1e-10;
  for (Index l = 0; l < q; ++l) {
    ++d.weyl_comparisons;
    if (std::abs(exact.eigenvalues[l] - estimated.eigenvalues[l]) > d.weyl_bound + tol) {
      ++d.weyl_violations;
    }
  }
  const DiscreteSpectrum aligned = align_signs(exact, estimated);
  d.eigenvalue_deviation.resize(L);
  d.discrete_gaps.resize(L);
  d.continuous_gaps.resize(L);
  d.gap_margins.resize(L);
  d.davis_kahan_ratio.resize(L);
  d.eigenvector_distance.resize(L);
  d.gap_condition.assign(static_cast<std::size_t>(L), false);
  d.gap_condition_ok = true;
  const double mesh_term = 4.0 * calibration.c1 * std::pow(h, 2.0 * smoothness);
  for (Index l = 1; l <= L; ++l) {
    const Index i = l - 1;
    d.eigenvalue_deviation[i] = std::abs(exact.eigenvalues[i] - estimated.eigenvalues[i]);
    d.discrete_gaps[i] = discrete_gap(exact.eigenvalues, estimated.eigenvalues, l);
    d.continuous_gaps[i] = oracle.gap(l);
    d.gap_margins[i] = d.continuous_gaps[i] - (mesh_term / oracle.eigenvalue(l + 1) + 4.0 * d.weyl_bound);
    const bool ok = d.gap_margins[i] >= 0.0;
    d.gap_condition[static_cast<std::size_t>(i)] = ok;
    d.gap_condition_ok = d.gap_condition_ok && ok;
    if (ok) {
      ++d.gap_theorem_checks;
      if (d.discrete_gaps[i] < 0.25 * d.continuous_gaps[i]) {
        ++d.gap_theorem_violations;
      }
    }
    d.davis_kahan_ratio[i] = d.discrete_gaps[i] > 0.0 ? d.weyl_bound / d.discrete_gaps[i]
                                                      : std::numeric_limits<double>::infinity();
    d.eigenvector_distance[i] = (exact.tilde_vectors.col(i) - aligned.tilde_vectors.col(i)).norm();
  }
  return d;
}

SpectralDiagnostics diagnostics(const DiscreteSpectrum& exact, const DiscreteSpectrum& estimated,
                                const TransformedStiffness& s_exact, const TransformedStiffness& s_est,
                                const KlOracle& oracle, Index L, const Calibration& calibration,
                                double smoothness, double h, const MassMatrix& mass,
                                const Matrix& cov_diff) {
  SpectralDiagnostics d =
      diagnostics(exact, estimated, s_exact, s_est, oracle, L, calibration, smoothness, h);
  d.sandwich = opnorm_sandwich(mass, opnorm(cov_diff));
  const double slack = 1e-10 * std::max(1.0, d.sandwich.second);
  d.sandwich_ok = d.weyl_bound >= d.sandwich.first - slack && d.weyl_bound <= d.sandwich.second + slack;
  return d;
}

}  // namespace covrecon
