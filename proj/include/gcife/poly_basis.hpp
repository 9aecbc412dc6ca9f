#pragma once

#include "gcife/curve.hpp"
#include "gcife/polynomial.hpp"

#include <Eigen/Core>

#include <vector>

namespace gcife {

inline int dim_p(int m) { return (m + 1) * (m + 2) / 2; }

/// Legendre polynomials p_0..p_m shifted to [xi0, xi1], p_k(xi1) = 1.
class Basis1D {
 public:
  Basis1D(int degree, double xi0, double xi1);

  int degree() const { return degree_; }
  double xi0() const { return axis_.global(-1.0); }
  double xi1() const { return axis_.global(1.0); }
  const AffineAxis& axis() const { return axis_; }

  /// Derivative `order` (0, 1 or 2) of p_0..p_m at xi.
  Eigen::VectorXd eval(double xi, int order = 0) const;

 private:
  int degree_;
  AffineAxis axis_;
};

Basis1D legendre_1d(int m, double xi0, double xi1);

/// d_m polynomials of total degree <= m in local variables
/// uhat = (u - cu) / hu, vhat = (v - cv) / hv, stored as a coefficient matrix
/// over the graded monomials uhat^a vhat^b (a outer, b inner).
class PolyBasis2D {
 public:
  PolyBasis2D() = default;
  PolyBasis2D(int degree, AffineAxis u_axis, AffineAxis v_axis, const std::vector<Poly2>& funcs);
  PolyBasis2D(int degree, AffineAxis u_axis, AffineAxis v_axis, Eigen::MatrixXd monomial_coefs);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(coefs_.cols()); }
  const AffineAxis& u_axis() const { return u_axis_; }
  const AffineAxis& v_axis() const { return v_axis_; }
  /// Rows index graded monomials, columns index basis functions.
  const Eigen::MatrixXd& monomial_coefs() const { return coefs_; }

  /// d^du/du^du d^dv/dv^dv of every basis function at (u, v), in global variables.
  Eigen::VectorXd eval(double u, double v, int du = 0, int dv = 0) const;
  /// Graded monomial derivatives at (u, v) in global variables; eval = coefsᵀ * this.
  Eigen::VectorXd monomials(double u, double v, int du = 0, int dv = 0) const;

 private:
  int degree_ = 0;
  AffineAxis u_axis_;
  AffineAxis v_axis_;
  Eigen::MatrixXd coefs_;
};

/// Index of the graded monomial u^a v^b, a + b <= m, with a outer.
inline int graded_index(int m, int a, int b) { return a * (m + 1) - a * (a - 1) / 2 + b; }

/// eta-scaled P_m basis on a Frenet box: etã^a p_b(xi), a outer, with etã
/// mapping [eta_min, eta_max] affinely onto [-1, 1] and p_b shifted Legendre
/// on [xi0, xi1].
PolyBasis2D frenet_monomial_basis(int m, const FrenetBox& box);

/// Same table with etã = eta / max(|eta_min|, |eta_max|), so every column
/// with a >= 1 vanishes on the interface.
PolyBasis2D interface_monomial_basis(int m, const FrenetBox& box);

/// Tensor Legendre P_a(etâ) P_b(xî), a + b <= m, on the Frenet box.
PolyBasis2D legendre_box_basis(int m, const FrenetBox& box);

/// L2-orthonormal P_m basis on the reference triangle (0,0), (1,0), (0,1).
const PolyBasis2D& reference_triangle_basis(int m);

enum class Derivative { Value, DEta, DXi };

/// V(r, j) = derivative of basis_j at point r; points are (u, v) = (eta, xi)
/// for Frenet bases and (x, y) for the reference triangle.
Eigen::MatrixXd vandermonde(const PolyBasis2D& basis, const std::vector<Vec2>& points,
                            Derivative d = Derivative::Value);

}  // namespace gcife
