#ifndef COVRECON_FEM_GRID_HPP
#define COVRECON_FEM_GRID_HPP

#include <array>
#include <cmath>
#include <functional>

#include "covrecon/quadrature.hpp"
#include "covrecon/types.hpp"

namespace covrecon {

/// Uniform partition of (0,1)^dim with n elements per axis.
///
/// Nodes are stored in lexicographic order: in 2D the node (x_i, y_j) has
/// index i * (n + 1) + j. This ordering is global and fixes the meaning of
/// "distance |j - j'|" used by the tapering estimator.
struct Mesh {
  int dim = 1;
  int elements_per_axis = 0;
  double h = 0.0;
  Matrix nodes;  // node_count() x dim

  Index nodes_per_axis() const { return elements_per_axis + 1; }
  Index node_count() const { return nodes.rows(); }
  Index element_count() const;
  Point node(Index j) const { return nodes.row(j).transpose(); }
};

/// Throws std::invalid_argument unless dim is 1 or 2 and n >= 2.
Mesh build_mesh(int dim, int n);

/// Nonzero nodal basis values at a point: at most 2^dim entries.
struct LocalBasis {
  std::array<Index, 4> index{};
  std::array<double, 4> value{};
  int size = 0;
};

/// Continuous piecewise (multi)linear nodal finite element space.
class FeSpace {
 public:
  explicit FeSpace(Mesh mesh);

  const Mesh& mesh() const { return mesh_; }
  int dim() const { return mesh_.dim; }
  double h() const { return mesh_.h; }
  Index dof_count() const { return mesh_.node_count(); }
  static constexpr int polynomial_degree = 1;

  bool contains(const Point& x) const;

  /// Basis functions that do not vanish at x. Throws std::invalid_argument
  /// if x lies outside the closed unit cube.
  LocalBasis basis_at(const Point& x) const;

  /// Dense vector theta(x) of all basis values.
  Vector basis_vector(const Point& x) const;

  /// Evaluates the finite element function with coefficients c at x.
  double evaluate(const Eigen::Ref<const Vector>& coefficients, const Point& x) const;

 private:
  Mesh mesh_;
};

/// Mass matrix G_{jk} = (theta_j, theta_k) with its Cholesky factor.
struct MassMatrix {
  Matrix matrix;
  Matrix chol;  // lower triangular, matrix = chol * chol^T
  double lambda_min = 0.0;
  double lambda_max = 0.0;

  Index size() const { return matrix.rows(); }
};

/// Exact P1 mass matrix; 2D is the Kronecker square of the 1D matrix.
MassMatrix assemble_mass(const FeSpace& space);

/// 1D P1 mass matrix on a uniform mesh with n elements.
Matrix mass_matrix_1d(int n);

/// Kronecker product A (x) B with the lexicographic node ordering.
Matrix kronecker(const Matrix& a, const Matrix& b);

using ScalarField = std::function<double(const Point&)>;

/// L2 projection onto the finite element space, q Gauss points per element
/// per axis for the load vector.
Vector l2_project(const FeSpace& space, const MassMatrix& mass, const ScalarField& f, int q = 4);
Vector l2_project(const FeSpace& space, const ScalarField& f, int q = 4);

/// Load vector b_j = int f theta_j computed with the given composite rule.
Vector load_vector(const FeSpace& space, const CompositeRule& rule, const ScalarField& f);

/// Weighted double sum sum_i sum_j w_i w_j k(p_i, p_j)^2 over a composite rule.
template <typename Kernel>
double kernel_l2_norm_squared(const CompositeRule& rule, Kernel&& k) {
  double total = 0.0;
  const Index n = rule.size();
  for (Index i = 0; i < n; ++i) {
    const Point xi = rule.point(i);
    double row = 0.0;
    for (Index j = 0; j < n; ++j) {
      const double v = k(xi, rule.point(j));
      row += rule.weights[j] * v * v;
    }
    total += rule.weights[i] * row;
  }
  return total;
}

/// Composite tensor Gauss approximation of the L2(D x D) norm of a
/// bivariate kernel, q points per element per axis (q >= 2).
template <typename Kernel>
double kernel_l2_norm(const FeSpace& space, Kernel&& k, int q = 2) {
  if (q < 2) {
    throw std::invalid_argument("kernel_l2_norm: q must be >= 2, got " + std::to_string(q));
  }
  const CompositeRule rule = composite_rule(space.mesh(), q);
  return std::sqrt(kernel_l2_norm_squared(rule, std::forward<Kernel>(k)));
}

}  // namespace covrecon

#endif  // COVRECON_FEM_GRID_HPP
