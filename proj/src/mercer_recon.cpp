#include "covrecon/mercer_recon.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace covrecon {

Matrix MercerKernel::coefficient_matrix() const {
  return vectors * eigenvalues.asDiagonal() * vectors.transpose();
}

MercerKernel build_kernel(const DiscreteSpectrum& spectrum, Index L, const FeSpace& space,
                          std::string provenance) {
  if (spectrum.size() != space.dof_count()) {
    throw std::invalid_argument("build_kernel: spectrum does not match the space");
  }
  if (L < 1 || L > spectrum.size()) {
    throw std::invalid_argument("build_kernel: L = " + std::to_string(L) + " outside [1, " +
                                std::to_string(spectrum.size()) + "]");
  }
  return MercerKernel{space,
                      L,
                      spectrum.eigenvalues.head(L),
                      spectrum.gen_vectors.leftCols(L),
                      spectrum.source,
                      std::move(provenance)};
}

namespace {

// Values phi_l(x) = Phi_l . theta(x) for l < cols(vectors).
Vector features_at(const FeSpace& space, const Matrix& vectors, const Point& x) {
  const LocalBasis local = space.basis_at(x);
  Vector f = Vector::Zero(vectors.cols());
  for (int k = 0; k < local.size; ++k) {
    f += local.value[k] * vectors.row(local.index[k]).transpose();
  }
  return f;
}

// N x L matrix of discrete eigenfunction values at the rule points.
Matrix discrete_features(const FeSpace& space, const CompositeRule& rule, const Matrix& vectors) {
  Matrix f(rule.size(), vectors.cols());
  for (Index i = 0; i < rule.size(); ++i) {
    f.row(i) = features_at(space, vectors, rule.point(i)).transpose();
  }
  return f;
}

Matrix oracle_features(const KlOracle& oracle, const CompositeRule& rule, Index L) {
  Matrix f(rule.size(), L);
  for (Index i = 0; i < rule.size(); ++i) {
    const Point x = rule.point(i);
    for (Index l = 0; l < L; ++l) {
      f(i, l) = oracle.eigenfunction(l + 1, x);
    }
  }
  return f;
}

// sum_ij w_i w_j (U_i diag(c) U_j^T)^2 = sum_ab c_a c_b (U^T W U)_ab^2.
double lowrank_norm_sq(const Matrix& u, const Vector& c, const Vector& w) {
  const Matrix gram = u.transpose() * w.asDiagonal() * u;
  return (c * c.transpose()).cwiseProduct(gram.cwiseAbs2()).sum();
}

// Exact L2 distance of two kernels in V_h (x) V_h given in Phi~ coordinates.
double discrete_kernel_distance(const Vector& lam_a, const Matrix& a, const Vector& lam_b, const Matrix& b) {
  return (a * lam_a.asDiagonal() * a.transpose() - b * lam_b.asDiagonal() * b.transpose()).norm();
}

}  // namespace

double eval(const MercerKernel& kernel, const Point& x, const Point& y) {
  const Vector a = features_at(kernel.space, kernel.vectors, x);
  const Vector b = features_at(kernel.space, kernel.vectors, y);
  double v = 0.0;
  for (Index l = 0; l < kernel.rank; ++l) {
    v += kernel.eigenvalues[l] * (a[l] * b[l]);
  }
  return v;
}

Matrix kernel_snapshot(const MercerKernel& kernel, const Matrix& points) {
  const Index n = points.rows();
  Matrix f(n, kernel.rank);
  for (Index i = 0; i < n; ++i) {
    f.row(i) = features_at(kernel.space, kernel.vectors, points.row(i).transpose()).transpose();
  }
  return f * kernel.eigenvalues.asDiagonal() * f.transpose();
}

Matrix regular_grid(int dim, int g) {
  if (g < 2) {
    throw std::invalid_argument("regular_grid: need at least 2 points per axis");
  }
  auto coord = [g](int i) { return static_cast<double>(i) / (g - 1); };
  if (dim == 1) {
    Matrix p(g, 1);
    for (int i = 0; i < g; ++i) {
      p(i, 0) = coord(i);
    }
    return p;
  }
  Matrix p(static_cast<Index>(g) * g, 2);
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      p(i * g + j, 0) = coord(i);
      p(i * g + j, 1) = coord(j);
    }
  }
  return p;
}

double truncation_error(const KlOracle& oracle, Index L) {
  if (L < 0) {
    throw std::invalid_argument("truncation_error: L must be >= 0");
  }
  if (oracle.dim() == 1) {
    // explicit tail of 10^6 terms, smallest first, plus the integral remainder
    constexpr Index kTerms = 1000000;
    const Index last = L + kTerms;
    const double pi4 = std::pow(std::numbers::pi, 4);
    double tail = 1.0 / (3.0 * pi4 * std::pow(static_cast<double>(last), 3));
    for (Index l = last; l > L; --l) {
      const double lam = KlOracle::eigenvalue_1d(static_cast<double>(l));
      tail += lam * lam;
    }
    return std::sqrt(tail);
  }
  double head = 0.0;
  for (Index l = 1; l <= L; ++l) {
    const double lam = oracle.eigenvalue(l);
    head += lam * lam;
  }
  return std::sqrt(std::max(0.0, oracle.squared_hs_norm() - head));
}

double e3_quadrature(const FeSpace& space, const DiscreteSpectrum& exact_spec,
                     const DiscreteSpectrum& est_spec, Index L, int q) {
  const CompositeRule rule = composite_rule(space.mesh(), q);
  const DiscreteSpectrum aligned = align_signs(exact_spec, est_spec);
  Matrix u(rule.size(), 2 * L);
  u.leftCols(L) = discrete_features(space, rule, exact_spec.gen_vectors.leftCols(L));
  u.rightCols(L) = discrete_features(space, rule, aligned.gen_vectors.leftCols(L));
  Vector c(2 * L);
  c << exact_spec.eigenvalues.head(L), -aligned.eigenvalues.head(L);
  return std::sqrt(std::max(0.0, lowrank_norm_sq(u, c, rule.weights)));
}

ErrorReport error_decomposition(const AnalyticField& field, const KlOracle& oracle, const FeSpace& space,
                                const DiscreteSpectrum& exact_spec, const DiscreteSpectrum& est_spec,
                                Index L, int q) {
  const Index nq = space.dof_count();
  if (exact_spec.size() != nq || est_spec.size() != nq) {
    throw std::invalid_argument("error_decomposition: spectra do not match the space");
  }
  if (L < 1 || L > nq) {
    throw std::invalid_argument("error_decomposition: L = " + std::to_string(L) + " outside [1, " +
                                std::to_string(nq) + "]");
  }
  if (q < 2) {
    throw std::invalid_argument("error_decomposition: q must be >= 2");
  }
  ErrorReport r;
  r.rank = L;
  r.q = q;
  const DiscreteSpectrum est = align_signs(exact_spec, est_spec);

  r.e1 = truncation_error(oracle, L);

  const CompositeRule rule = composite_rule(space.mesh(), q);
  const Matrix f_exact = discrete_features(space, rule, exact_spec.gen_vectors.leftCols(L));
  {
    Matrix u(rule.size(), 2 * L);
    u.leftCols(L) = oracle_features(oracle, rule, L);
    u.rightCols(L) = f_exact;
    Vector c(2 * L);
    for (Index l = 0; l < L; ++l) {
      c[l] = oracle.eigenvalue(l + 1);
      c[L + l] = -exact_spec.eigenvalues[l];
    }
    r.e2 = std::sqrt(std::max(0.0, lowrank_norm_sq(u, c, rule.weights)));
  }

  const Matrix a = exact_spec.tilde_vectors.leftCols(L);
  const Matrix b = est.tilde_vectors.leftCols(L);
  const Vector lam_h = exact_spec.eigenvalues.head(L);
  const Vector lam_m = est.eigenvalues.head(L);
  r.e3 = discrete_kernel_distance(lam_h, a, lam_m, b);
  const Matrix e31 = a * (lam_h - lam_m).asDiagonal() * a.transpose();
  const Matrix e32 = (a - b) * lam_m.asDiagonal() * a.transpose();
  const Matrix e33 = b * lam_m.asDiagonal() * (a - b).transpose();
  r.e31 = e31.norm();
  r.e32 = e32.norm();
  r.e33 = e33.norm();
  r.e3_split = (e31 + e32 + e33).norm();
  for (Index l = 1; l <= L && l < nq; ++l) {
    if (exact_spec.eigenvalues[l - 1] - exact_spec.eigenvalues[l] < 1e-8 * std::abs(exact_spec.eigenvalues[0])) {
      r.split_reliable = false;
    }
  }

  // total: sum_ij w_i w_j (R(p_i, p_j) - B(p_i, p_j))^2, row blocks of B = F Lambda F^T
  const Matrix f_est = discrete_features(space, rule, est.gen_vectors.leftCols(L));
  const Matrix f_scaled = f_est * lam_m.asDiagonal();
  const Index n = rule.size();
  const Index block = 256;
  double total_sq = 0.0;
  for (Index start = 0; start < n; start += block) {
    const Index rows = std::min(block, n - start);
    const Matrix bvals = f_scaled.middleRows(start, rows) * f_est.transpose();
    for (Index i = 0; i < rows; ++i) {
      const Point xi = rule.point(start + i);
      double row = 0.0;
      for (Index j = 0; j < n; ++j) {
        const double diff = field.covariance(xi, rule.point(j)) - bvals(i, j);
        row += rule.weights[j] * diff * diff;
      }
      total_sq += rule.weights[start + i] * row;
    }
  }
  r.total = std::sqrt(total_sq);
  r.triangle_slack = r.total - (r.e1 + r.e2 + r.e3);
  return r;
}

}  // namespace covrecon
