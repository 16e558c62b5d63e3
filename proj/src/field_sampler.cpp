#include "covrecon/field_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace covrecon {

namespace {

constexpr double kPi = std::numbers::pi;
// Largest odd product (2l1-1)(2l2-1) tabulated for the 2D sheet.
constexpr int kSheetProductLimit = 4001;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <typename Fn>
void parallel_rows(Index rows, int workers, Fn&& fn) {
  const int count = std::max(1, std::min<int>(workers, static_cast<int>(rows)));
  if (count == 1) {
    fn(Index{0}, rows);
    return;
  }
  std::vector<std::thread> pool;
  const Index chunk = (rows + count - 1) / count;
  for (int w = 0; w < count; ++w) {
    const Index begin = w * chunk;
    const Index end = std::min(rows, begin + chunk);
    if (begin >= end) {
      break;
    }
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) {
    t.join();
  }
}

// Standard normal draws; row m of the result comes from substream (seed, m).
Matrix normal_matrix(Index rows, Index cols, std::uint64_t seed, int workers) {
  Matrix z(rows, cols);
  parallel_rows(rows, workers, [&](Index begin, Index end) {
    for (Index m = begin; m < end; ++m) {
      std::mt19937_64 gen = make_substream(seed, static_cast<std::uint64_t>(m));
      std::normal_distribution<double> normal(0.0, 1.0);
      for (Index k = 0; k < cols; ++k) {
        z(m, k) = normal(gen);
      }
    }
  });
  return z;
}

}  // namespace

std::string to_string(FieldKind kind) {
  return kind == FieldKind::BrownianMotion1D ? "brownian_motion" : "brownian_sheet";
}

FieldKind field_kind_from_string(const std::string& name) {
  if (name == "brownian_motion" || name == "BrownianMotion1D") {
    return FieldKind::BrownianMotion1D;
  }
  if (name == "brownian_sheet" || name == "BrownianSheet2D") {
    return FieldKind::BrownianSheet2D;
  }
  throw std::invalid_argument("unknown field kind '" + name + "'");
}

double AnalyticField::covariance(const Point& x, const Point& y) const {
  double r = std::min(x[0], y[0]);
  if (dim == 2) {
    r *= std::min(x[1], y[1]);
  }
  return r;
}

AnalyticField brownian_field(int dim, double smoothness_defect) {
  if (dim != 1 && dim != 2) {
    throw std::invalid_argument("brownian_field: dim must be 1 or 2");
  }
  AnalyticField f;
  f.dim = dim;
  f.kind = dim == 1 ? FieldKind::BrownianMotion1D : FieldKind::BrownianSheet2D;
  f.smoothness = 0.5 - smoothness_defect;
  return f;
}

double KlOracle::eigenvalue_1d(double l) {
  const double a = l - 0.5;
  return 1.0 / (kPi * kPi * a * a);
}

double KlOracle::gap_1d(double l) {
  const double b = l * l - 0.25;
  return 2.0 * l / (kPi * kPi * b * b);
}

double KlOracle::eigenfunction_1d(Index l, double x) {
  return std::numbers::sqrt2 * std::sin((static_cast<double>(l) - 0.5) * kPi * x);
}

KlOracle::KlOracle(int dim) : dim_(dim) {
  if (dim != 1 && dim != 2) {
    throw std::invalid_argument("KlOracle: dim must be 1 or 2");
  }
  if (dim == 2) {
    for (int a = 1; 2 * a - 1 <= kSheetProductLimit; ++a) {
      for (int b = 1; (2 * a - 1) * (2 * b - 1) <= kSheetProductLimit; ++b) {
        modes_.emplace_back(a, b);
      }
    }
    auto product = [](const std::pair<int, int>& p) { return (2 * p.first - 1) * (2 * p.second - 1); };
    std::stable_sort(modes_.begin(), modes_.end(), [&](const auto& p, const auto& q) {
      return product(p) < product(q);
    });
  }
}

Index KlOracle::mode_limit() const {
  return dim_ == 1 ? std::numeric_limits<Index>::max() : static_cast<Index>(modes_.size());
}

std::pair<int, int> KlOracle::mode_indices(Index l) const {
  if (l < 1 || l > mode_limit()) {
    throw std::out_of_range("KlOracle: mode index " + std::to_string(l) + " out of range");
  }
  if (dim_ == 1) {
    return {static_cast<int>(l), 1};
  }
  return modes_[static_cast<std::size_t>(l - 1)];
}

double KlOracle::eigenvalue(Index l) const {
  if (dim_ == 1) {
    if (l < 1) {
      throw std::out_of_range("KlOracle: mode index must be >= 1");
    }
    return eigenvalue_1d(static_cast<double>(l));
  }
  const auto [a, b] = mode_indices(l);
  // 16 / (pi^4 m^2) from the integer product, so equal products give equal values
  const double m = static_cast<double>((2 * a - 1) * (2 * b - 1));
  return 16.0 / (kPi * kPi * kPi * kPi * m * m);
}

double KlOracle::eigenfunction(Index l, const Point& x) const {
  const auto [a, b] = mode_indices(l);
  double v = eigenfunction_1d(a, x[0]);
  if (dim_ == 2) {
    v *= eigenfunction_1d(b, x[1]);
  }
  return v;
}

double KlOracle::gap(Index l) const {
  if (dim_ == 1) {
    if (l < 1) {
      throw std::out_of_range("KlOracle: mode index must be >= 1");
    }
    return gap_1d(static_cast<double>(l));
  }
  const double lam = eigenvalue(l);
  double g = lam - eigenvalue(l + 1);
  if (l > 1) {
    g = std::min(g, eigenvalue(l - 1) - lam);
  }
  return g;
}

double KlOracle::level_eigenvalue(Index k) const {
  const double base = dim_ == 2 ? eigenvalue_1d(1.0) : 1.0;
  return base * eigenvalue_1d(static_cast<double>(k));
}

double KlOracle::level_gap(Index k) const {
  const double base = dim_ == 2 ? eigenvalue_1d(1.0) : 1.0;
  return base * gap_1d(static_cast<double>(k));
}

double KlOracle::squared_hs_norm() const { return dim_ == 1 ? 1.0 / 6.0 : 1.0 / 36.0; }

KlOracle brownian_oracle(int dim) { return KlOracle(dim); }

std::string to_string(SamplingMode mode) {
  return mode == SamplingMode::NodalInterpolation ? "nodal" : "projection";
}

SamplingMode sampling_mode_from_string(const std::string& name) {
  if (name == "nodal" || name == "NodalInterpolation") {
    return SamplingMode::NodalInterpolation;
  }
  if (name == "projection" || name == "L2ProjectionOfTruncatedKL") {
    return SamplingMode::L2ProjectionOfTruncatedKL;
  }
  throw std::invalid_argument("unknown sampling mode '" + name + "'");
}

std::mt19937_64 make_substream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t k : keys) {
    h = splitmix64(h ^ splitmix64(k));
  }
  return h;
}

Matrix exact_discrete_covariance(const AnalyticField& field, const FeSpace& space) {
  const Mesh& mesh = space.mesh();
  const Index q = mesh.node_count();
  Matrix sigma(q, q);
  for (Index j = 0; j < q; ++j) {
    const Point xj = mesh.node(j);
    for (Index k = 0; k <= j; ++k) {
      const double v = field.covariance(xj, mesh.node(k));
      sigma(j, k) = v;
      sigma(k, j) = v;
    }
  }
  return sigma;
}

namespace {

Matrix draw_nodal(const AnalyticField& field, const FeSpace& space, Index count,
                  std::uint64_t seed, int workers) {
  const Index q = space.dof_count();
  if (field.dim == 1) {
    // W(x_i) = sum of i independent N(0, h) increments
    const Index n = q - 1;
    const Matrix z = normal_matrix(count, n, seed, workers);
    const double sd = std::sqrt(space.h());
    Matrix c(count, q);
    c.col(0).setZero();
    for (Index i = 1; i < q; ++i) {
      c.col(i) = c.col(i - 1) + sd * z.col(i - 1);
    }
    return c;
  }
  const Matrix sigma = exact_discrete_covariance(field, space);
  std::vector<Index> live;
  for (Index j = 0; j < q; ++j) {
    if (sigma(j, j) > 0.0) {
      live.push_back(j);
    }
  }
  const Index r = static_cast<Index>(live.size());
  Matrix sub(r, r);
  for (Index a = 0; a < r; ++a) {
    for (Index b = 0; b < r; ++b) {
      sub(a, b) = sigma(live[a], live[b]);
    }
  }
  Eigen::LLT<Matrix> llt(sub);
  if (llt.info() != Eigen::Success) {
    throw NumericError("draw_batch: Cholesky of the nodal covariance failed (reduce n)");
  }
  const Matrix z = normal_matrix(count, r, seed, workers);
  const Matrix values = z * llt.matrixL().transpose();
  Matrix c = Matrix::Zero(count, q);
  for (Index a = 0; a < r; ++a) {
    c.col(live[a]) = values.col(a);
  }
  return c;
}

Matrix draw_projection(const AnalyticField& field, const FeSpace& space, Index count,
                       std::uint64_t seed, int kl_trunc, int workers) {
  const KlOracle oracle(field.dim);
  if (kl_trunc > oracle.mode_limit()) {
    throw std::invalid_argument("draw_batch: kl_trunc exceeds the tabulated oracle modes");
  }
  const MassMatrix mass = assemble_mass(space);
  const CompositeRule rule = composite_rule(space.mesh(), 4);
  // Column l: coefficients of the projected sqrt(lambda_l) phi_l.
  Matrix p(space.dof_count(), kl_trunc);
  for (int l = 1; l <= kl_trunc; ++l) {
    const Vector b = load_vector(space, rule, [&](const Point& x) { return oracle.eigenfunction(l, x); });
    Vector c = mass.chol.triangularView<Eigen::Lower>().solve(b);
    mass.chol.transpose().triangularView<Eigen::Upper>().solveInPlace(c);
    p.col(l - 1) = std::sqrt(oracle.eigenvalue(l)) * c;
  }
  const Matrix z = normal_matrix(count, kl_trunc, seed, workers);
  return z * p.transpose();
}

}  // namespace

SampleBatch draw_batch(const AnalyticField& field, const FeSpace& space, Index sample_count,
                       SamplingMode mode, std::uint64_t seed, int kl_trunc, int workers) {
  if (sample_count < 1) {
    throw std::invalid_argument("draw_batch: M must be >= 1");
  }
  if (field.dim != space.dim()) {
    throw std::invalid_argument("draw_batch: field and space dimensions differ");
  }
  SampleBatch batch{space, Matrix(), mode, 0, seed, field.kind};
  if (mode == SamplingMode::NodalInterpolation) {
    batch.coeffs = draw_nodal(field, space, sample_count, seed, workers);
  } else {
    if (kl_trunc < 1) {
      throw std::invalid_argument("draw_batch: kl_trunc must be >= 1 in projection mode");
    }
    batch.kl_trunc = kl_trunc;
    batch.coeffs = draw_projection(field, space, sample_count, seed, kl_trunc, workers);
  }
  return batch;
}

MomentDiagnostics moment_diagnostics(const SampleBatch& batch) {
  const Index m = batch.sample_count();
  if (m < 2) {
    throw std::invalid_argument("moment_diagnostics: need M >= 2");
  }
  MomentDiagnostics d;
  double acc = 0.0;
  for (Index i = 0; i < m; ++i) {
    const double sup = batch.coeffs.row(i).cwiseAbs().maxCoeff();
    acc += sup * sup;
  }
  d.c_inf_hat = std::sqrt(acc / static_cast<double>(m));
  d.mean_max_abs = (batch.coeffs.colwise().sum() / static_cast<double>(m)).cwiseAbs().maxCoeff();
  d.centering_ok = d.mean_max_abs <= 3.0 * d.c_inf_hat / std::sqrt(static_cast<double>(m));
  return d;
}

}  // namespace covrecon
