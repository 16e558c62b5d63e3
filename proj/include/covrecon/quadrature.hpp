#ifndef COVRECON_QUADRATURE_HPP
#define COVRECON_QUADRATURE_HPP

#include "covrecon/types.hpp"

namespace covrecon {

/// Gauss-Legendre rule mapped to [0,1].
struct GaussRule {
  Vector nodes;
  Vector weights;
};

/// q-point Gauss-Legendre rule on [0,1], q >= 1. Exact for polynomials
/// of degree 2q-1.
GaussRule gauss_legendre(int q);

struct Mesh;

/// Composite tensor Gauss rule over all elements of a mesh.
/// points is N x dim, weights has length N; points are grouped by element.
struct CompositeRule {
  Matrix points;
  Vector weights;

  Index size() const { return weights.size(); }
  Point point(Index i) const { return points.row(i).transpose(); }
};

CompositeRule composite_rule(const Mesh& mesh, int q);

}  // namespace covrecon

#endif  // COVRECON_QUADRATURE_HPP
