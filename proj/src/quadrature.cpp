#include "covrecon/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "covrecon/fem_grid.hpp"

namespace covrecon {

namespace {

// Legendre polynomial P_q and its derivative at x in (-1,1).
std::pair<double, double> legendre(int q, double x) {
  double p0 = 1.0;
  double p1 = x;
  for (int k = 2; k <= q; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p1, q * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

GaussRule gauss_legendre(int q) {
  if (q < 1) {
    throw std::invalid_argument("gauss_legendre: q must be >= 1, got " + std::to_string(q));
  }
  GaussRule rule{Vector(q), Vector(q)};
  // Newton on P_q from the usual cosine guess; symmetric, so half the roots.
  const int half = (q + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(q, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        break;
      }
    }
    const double dp = legendre(q, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = 0.5 * (1.0 - x);
    rule.nodes[q - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[q - 1 - i] = 0.5 * w;
  }
  return rule;
}

CompositeRule composite_rule(const Mesh& mesh, int q) {
  const GaussRule g = gauss_legendre(q);
  const int n = mesh.elements_per_axis;
  const double h = mesh.h;
  CompositeRule rule;
  if (mesh.dim == 1) {
    const Index count = static_cast<Index>(n) * q;
    rule.points.resize(count, 1);
    rule.weights.resize(count);
    Index k = 0;
    for (int e = 0; e < n; ++e) {
      for (int a = 0; a < q; ++a, ++k) {
        rule.points(k, 0) = (e + g.nodes[a]) * h;
        rule.weights[k] = g.weights[a] * h;
      }
    }
    return rule;
  }
  const Index count = static_cast<Index>(n) * n * q * q;
  rule.points.resize(count, 2);
  rule.weights.resize(count);
  Index k = 0;
  for (int ex = 0; ex < n; ++ex) {
    for (int ey = 0; ey < n; ++ey) {
      for (int a = 0; a < q; ++a) {
        for (int b = 0; b < q; ++b, ++k) {
          rule.points(k, 0) = (ex + g.nodes[a]) * h;
          rule.points(k, 1) = (ey + g.nodes[b]) * h;
          rule.weights[k] = g.weights[a] * g.weights[b] * h * h;
        }
      }
    }
  }
  return rule;
}

}  // namespace covrecon
