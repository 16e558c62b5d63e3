#ifndef COVRECON_TYPES_HPP
#define COVRECON_TYPES_HPP

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace covrecon {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point of the unit cube in one or two dimensions; stack allocated.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 2, 1>;

inline Point make_point(double x) {
  Point p(1);
  p << x;
  return p;
}

inline Point make_point(double x, double y) {
  Point p(2);
  p << x, y;
  return p;
}

/// Raised when a numerical routine cannot produce a trustworthy result
/// (failed factorization, eigensolver non-convergence, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when spectral functionals hit a zero gap.
class DegenerateSpectrum : public NumericError {
 public:
  using NumericError::NumericError;
};

/// User-supplied constants for inequalities whose constants are not numeric.
struct Calibration {
  double c1 = 1.0;       // Galerkin eigenvalue error constant
  double c2 = 1.0;       // Galerkin eigenfunction error constant
  double c_dk = 1.0;     // Davis-Kahan constant
  double h0 = 0.5;       // largest admissible mesh width
  double rho1 = 1.0;     // sub-Gaussian concentration constant
  double lambda_max_mass = 1.0;
};

}  // namespace covrecon

#endif  // COVRECON_TYPES_HPP
