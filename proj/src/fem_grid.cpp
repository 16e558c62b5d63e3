#include "covrecon/fem_grid.hpp"

#include <algorithm>
#include <string>

namespace covrecon {

Index Mesh::element_count() const {
  Index count = 1;
  for (int a = 0; a < dim; ++a) {
    count *= elements_per_axis;
  }
  return count;
}

Mesh build_mesh(int dim, int n) {
  if (dim != 1 && dim != 2) {
    throw std::invalid_argument("build_mesh: dim must be 1 or 2, got " + std::to_string(dim));
  }
  if (n < 2) {
    throw std::invalid_argument("build_mesh: need at least 2 elements per axis, got " +
                                std::to_string(n));
  }
  Mesh mesh;
  mesh.dim = dim;
  mesh.elements_per_axis = n;
  mesh.h = 1.0 / n;
  const Index per_axis = n + 1;
  // i / n rather than i * h so the last node is exactly 1
  auto coord = [n](Index i) { return static_cast<double>(i) / n; };
  if (dim == 1) {
    mesh.nodes.resize(per_axis, 1);
    for (Index i = 0; i < per_axis; ++i) {
      mesh.nodes(i, 0) = coord(i);
    }
  } else {
    mesh.nodes.resize(per_axis * per_axis, 2);
    for (Index i = 0; i < per_axis; ++i) {
      for (Index j = 0; j < per_axis; ++j) {
        mesh.nodes(i * per_axis + j, 0) = coord(i);
        mesh.nodes(i * per_axis + j, 1) = coord(j);
      }
    }
  }
  return mesh;
}

FeSpace::FeSpace(Mesh mesh) : mesh_(std::move(mesh)) {}

bool FeSpace::contains(const Point& x) const {
  if (x.size() != mesh_.dim) {
    return false;
  }
  for (Index a = 0; a < x.size(); ++a) {
    if (!(x[a] >= 0.0 && x[a] <= 1.0)) {
      return false;
    }
  }
  return true;
}

namespace {

// Element index along one axis and the local coordinate in [0,1].
std::pair<Index, double> locate(double x, int n) {
  const double scaled = x * n;
  const Index e = std::min<Index>(static_cast<Index>(scaled), n - 1);
  return {e, scaled - static_cast<double>(e)};
}

}  // namespace

LocalBasis FeSpace::basis_at(const Point& x) const {
  if (!contains(x)) {
    throw std::invalid_argument("FeSpace::basis_at: point outside the closed unit cube");
  }
  const int n = mesh_.elements_per_axis;
  LocalBasis local;
  if (mesh_.dim == 1) {
    const auto [e, t] = locate(x[0], n);
    local.size = 2;
    local.index[0] = e;
    local.value[0] = 1.0 - t;
    local.index[1] = e + 1;
    local.value[1] = t;
    return local;
  }
  const Index per_axis = n + 1;
  const auto [ex, tx] = locate(x[0], n);
  const auto [ey, ty] = locate(x[1], n);
  const double wx[2] = {1.0 - tx, tx};
  const double wy[2] = {1.0 - ty, ty};
  local.size = 4;
  int k = 0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b, ++k) {
      local.index[k] = (ex + a) * per_axis + (ey + b);
      local.value[k] = wx[a] * wy[b];
    }
  }
  return local;
}

Vector FeSpace::basis_vector(const Point& x) const {
  Vector theta = Vector::Zero(dof_count());
  const LocalBasis local = basis_at(x);
  for (int k = 0; k < local.size; ++k) {
    theta[local.index[k]] += local.value[k];
  }
  return theta;
}

double FeSpace::evaluate(const Eigen::Ref<const Vector>& coefficients, const Point& x) const {
  const LocalBasis local = basis_at(x);
  double value = 0.0;
  for (int k = 0; k < local.size; ++k) {
    value += coefficients[local.index[k]] * local.value[k];
  }
  return value;
}

Matrix mass_matrix_1d(int n) {
  const double h = 1.0 / n;
  Matrix g = Matrix::Zero(n + 1, n + 1);
  for (int e = 0; e < n; ++e) {
    g(e, e) += h / 3.0;
    g(e + 1, e + 1) += h / 3.0;
    g(e, e + 1) += h / 6.0;
    g(e + 1, e) += h / 6.0;
  }
  return g;
}

Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return k;
}

MassMatrix assemble_mass(const FeSpace& space) {
  MassMatrix mass;
  const Matrix g1 = mass_matrix_1d(space.mesh().elements_per_axis);
  mass.matrix = space.dim() == 1 ? g1 : kronecker(g1, g1);

  Eigen::LLT<Matrix> llt(mass.matrix);
  if (llt.info() != Eigen::Success) {
    throw NumericError("assemble_mass: Cholesky factorization of the mass matrix failed");
  }
  mass.chol = llt.matrixL();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(mass.matrix, Eigen::EigenvaluesOnly);
  mass.lambda_min = eig.eigenvalues().minCoeff();
  mass.lambda_max = eig.eigenvalues().maxCoeff();
  return mass;
}

Vector load_vector(const FeSpace& space, const CompositeRule& rule, const ScalarField& f) {
  Vector b = Vector::Zero(space.dof_count());
  for (Index i = 0; i < rule.size(); ++i) {
    const Point x = rule.point(i);
    const double fw = f(x) * rule.weights[i];
    const LocalBasis local = space.basis_at(x);
    for (int k = 0; k < local.size; ++k) {
      b[local.index[k]] += fw * local.value[k];
    }
  }
  return b;
}

Vector l2_project(const FeSpace& space, const MassMatrix& mass, const ScalarField& f, int q) {
  const Vector b = load_vector(space, composite_rule(space.mesh(), q), f);
  Vector c = mass.chol.triangularView<Eigen::Lower>().solve(b);
  mass.chol.transpose().triangularView<Eigen::Upper>().solveInPlace(c);
  const double scale = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
  if ((mass.matrix * c - b).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw NumericError("l2_project: mass-matrix solve residual above tolerance");
  }
  return c;
}

Vector l2_project(const FeSpace& space, const ScalarField& f, int q) {
  return l2_project(space, assemble_mass(space), f, q);
}

}  // namespace covrecon
