#pragma once

#include <span>
#include <vector>

namespace gcife {

/// Affine change of variable t = (x - center) / half_width.
struct AffineAxis {
  double center = 0.0;
  double half_width = 1.0;

  double local(double x) const { return (x - center) / half_width; }
  double global(double t) const { return center + half_width * t; }
};

/// Univariate polynomial sum_k c[k] t^k.
class Poly1 {
 public:
  Poly1() = default;
  explicit Poly1(std::vector<double> coefs) : c_(std::move(coefs)) {}

  int degree() const { return static_cast<int>(c_.size()) - 1; }
  std::span<const double> coefficients() const { return c_; }
  double operator[](int k) const { return k < static_cast<int>(c_.size()) ? c_[k] : 0.0; }
  double eval(double t) const;

 private:
  std::vector<double> c_;
};

/// Legendre polynomials P_0..P_m on [-1, 1] in monomial form.
std::vector<Poly1> legendre_monomial_tables(int m);

/// Bivariate polynomial sum_{a+b<=m} c(a,b) u^a v^b stored as a dense table.
class Poly2 {
 public:
  Poly2() = default;
  explicit Poly2(int degree);

  int degree() const { return degree_; }
  double& coef(int a, int b) { return c_[a * (degree_ + 1) + b]; }
  double coef(int a, int b) const { return c_[a * (degree_ + 1) + b]; }

  /// d^du/du^du d^dv/dv^dv at (u, v), computed from the exact coefficient table.
  double eval(double u, double v, int du = 0, int dv = 0) const;

  /// u^a_factor(u) * v_factor(v) for univariate factors.
  static Poly2 tensor(int degree, const Poly1& fu, const Poly1& fv);

 private:
  int degree_ = 0;
  std::vector<double> c_;
};

/// Falling factorial n (n-1) ... (n-k+1); zero when k > n.
double falling_factorial(int n, int k);

}  // namespace gcife
