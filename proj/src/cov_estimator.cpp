#include "covrecon/cov_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace covrecon {

std::string to_string(EstimatorKind kind) { return kind == EstimatorKind::MLE ? "mle" : "tapered"; }

EstimatorKind estimator_kind_from_string(const std::string& name) {
  if (name == "mle" || name == "MLE") {
    return EstimatorKind::MLE;
  }
  if (name == "tapered" || name == "Tapered") {
    return EstimatorKind::Tapered;
  }
  throw std::invalid_argument("unknown estimator '" + name + "'");
}

Vector sample_mean(const Matrix& samples) {
  if (samples.rows() < 1) {
    throw std::invalid_argument("sample_mean: need at least one sample");
  }
  return samples.colwise().mean().transpose();
}

Vector sample_mean(const SampleBatch& batch) { return sample_mean(batch.coeffs); }

TaperedCovariance mle_covariance(const Matrix& samples) {
  const Index m = samples.rows();
  if (m < 2) {
    throw std::invalid_argument("mle_covariance: need M >= 2, got " + std::to_string(m));
  }
  const Matrix centered = samples.rowwise() - sample_mean(samples).transpose();
  TaperedCovariance cov;
  cov.matrix.setZero(samples.cols(), samples.cols());
  cov.matrix.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / static_cast<double>(m));
  cov.matrix = cov.matrix.selfadjointView<Eigen::Lower>();
  cov.kind = EstimatorKind::MLE;
  cov.sample_count = m;
  return cov;
}

TaperedCovariance mle_covariance(const SampleBatch& batch) { return mle_covariance(batch.coeffs); }

double tapering_weight(int tau, Index j, Index k) {
  if (tau < 2 || tau % 2 != 0) {
    throw std::invalid_argument("tapering_weight: tau must be a positive even integer, got " +
                                std::to_string(tau));
  }
  const double dist = static_cast<double>(j > k ? j - k : k - j);
  if (2.0 * dist <= tau) {
    return 1.0;
  }
  if (dist < tau) {
    return 2.0 * (1.0 - dist / tau);
  }
  return 0.0;
}

int tapering_width(Index sample_count, double alpha, Index dof_count) {
  if (alpha <= 0.0) {
    throw std::invalid_argument("tapering_width: alpha must be positive");
  }
  const double raw = std::pow(static_cast<double>(sample_count), 1.0 / (2.0 * alpha + 1.0));
  // pow(1000, 1/3) lands a hair below 10
  const double snapped = std::abs(raw - std::round(raw)) < 1e-9 * raw ? std::round(raw) : raw;
  if (static_cast<double>(dof_count) < snapped) {
    return 0;
  }
  Index tau = static_cast<Index>(std::ceil(snapped));
  if (tau % 2 != 0) {
    ++tau;
  }
  const Index upper = std::max<Index>(2, dof_count - dof_count % 2);
  return static_cast<int>(std::clamp<Index>(tau, 2, upper));
}

TaperedCovariance taper_with_width(const TaperedCovariance& mle, int tau, double alpha) {
  TaperedCovariance out;
  out.matrix = mle.matrix;
  const Index q = out.matrix.rows();
  for (Index j = 0; j < q; ++j) {
    for (Index k = 0; k < q; ++k) {
      const double w = tapering_weight(tau, j, k);
      if (w != 1.0) {
        out.matrix(j, k) *= w;
      }
    }
  }
  out.tau = tau;
  out.alpha = alpha;
  out.kind = EstimatorKind::Tapered;
  out.sample_count = mle.sample_count;
  return out;
}

TaperedCovariance taper(const TaperedCovariance& mle, double alpha) {
  const int tau = tapering_width(mle.sample_count, alpha, mle.matrix.rows());
  if (tau == 0) {
    TaperedCovariance out = mle;
    out.alpha = alpha;
    return out;
  }
  return taper_with_width(mle, tau, alpha);
}

double rho_tilde_large_q(double h, double sample_count, double alpha, int dim) {
  return std::pow(sample_count, -2.0 * alpha / (2.0 * alpha + 1.0)) +
         dim * std::log(1.0 / h) / sample_count;
}

double rho_tilde_small_q(double h, double sample_count, int dim) {
  return std::pow(h, -static_cast<double>(dim)) / sample_count;
}

double rho_tilde(double h, double sample_count, double alpha, int dim) {
  const double q = std::pow(1.0 / h + 1.0, dim);
  if (q >= std::pow(sample_count, 1.0 / (2.0 * alpha + 1.0))) {
    return rho_tilde_large_q(h, sample_count, alpha, dim);
  }
  return rho_tilde_small_q(h, sample_count, dim);
}

DecayClassCheck decay_class_check(const Matrix& a, double alpha, double c1, double c2) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("decay_class_check: matrix must be square");
  }
  const Index q = a.rows();
  DecayClassCheck check;
  check.alpha = alpha;
  check.tails.assign(static_cast<std::size_t>(q), 0.0);
  std::vector<double> by_dist(static_cast<std::size_t>(q));
  for (Index j = 0; j < q; ++j) {
    std::fill(by_dist.begin(), by_dist.end(), 0.0);
    for (Index k = 0; k < q; ++k) {
      by_dist[static_cast<std::size_t>(std::abs(j - k))] += std::abs(a(j, k));
    }
    // tails over distance > c for c = q-1 .. 1
    double tail = 0.0;
    for (Index c = q - 1; c >= 1; --c) {
      check.tails[static_cast<std::size_t>(c - 1)] =
          std::max(check.tails[static_cast<std::size_t>(c - 1)], tail);
      tail += by_dist[static_cast<std::size_t>(c)];
    }
  }
  for (Index c = 1; c <= q; ++c) {
    check.c1_est = std::max(check.c1_est, check.tails[static_cast<std::size_t>(c - 1)] * std::pow(c, alpha));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
  check.lambda_max = q > 0 ? eig.eigenvalues().maxCoeff() : 0.0;
  check.passes = check.c1_est <= c1 && check.lambda_max <= c2;
  return check;
}

SubgaussianDiagnostic subgaussian_diagnostic(const SampleBatch& batch) {
  const double c = moment_diagnostics(batch).c_inf_hat;
  return {4.0 * c * c};
}

double opnorm(const Matrix& symmetric) {
  if (symmetric.size() == 0) {
    return 0.0;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw NumericError("opnorm: symmetric eigensolver did not converge");
  }
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix gaussian_samples(const Matrix& sigma, Index sample_count, std::uint64_t seed) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw NumericError("gaussian_samples: covariance is not positive definite");
  }
  const Index q = sigma.rows();
  Matrix z(sample_count, q);
  for (Index m = 0; m < sample_count; ++m) {
    std::mt19937_64 gen = make_substream(seed, static_cast<std::uint64_t>(m));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index k = 0; k < q; ++k) {
      z(m, k) = normal(gen);
    }
  }
  return z * llt.matrixL().transpose();
}

Matrix synthetic_decay_covariance(Index dof_count, double alpha) {
  Matrix s(dof_count, dof_count);
  for (Index j = 0; j < dof_count; ++j) {
    for (Index k = 0; k < dof_count; ++k) {
      s(j, k) = std::pow(1.0 + static_cast<double>(std::abs(j - k)), -alpha - 1.0);
    }
  }
  return s;
}

std::vector<RateSample> tapering_rate_study(const Matrix& truth, const std::vector<Index>& sample_counts,
                                            int n_rep, double alpha, EstimatorKind kind,
                                            std::uint64_t seed) {
  std::vector<RateSample> out;
  for (Index m : sample_counts) {
    for (int rep = 0; rep < n_rep; ++rep) {
      const std::uint64_t key =
          derive_seed(seed, {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(rep)});
      const Matrix samples = gaussian_samples(truth, m, key);
      TaperedCovariance est = mle_covariance(samples);
      if (kind == EstimatorKind::Tapered) {
        est = taper(est, alpha);
      }
      const double err = opnorm(est.matrix - truth);
      out.push_back({m, rep, err, err * err});
    }
  }
  return out;
}

}  // namespace covrecon
