#include "gcife/poly_basis.hpp"

#include "gcife/errors.hpp"
#include "gcife/quadrature.hpp"

#include <Eigen/QR>
#include <fmt/format.h>

#include <cmath>
#include <map>
#include <mutex>

namespace gcife {

Basis1D::Basis1D(int degree, double xi0, double xi1) : degree_(degree) {
  if (!(xi1 > xi0)) fail(ErrorKind::EmptyInterval, fmt::format("[{}, {}]", xi0, xi1));
  if (degree < 0) fail(ErrorKind::ConfigError, "negative degree");
  axis_ = {0.5 * (xi0 + xi1), 0.5 * (xi1 - xi0)};
}

Eigen::VectorXd Basis1D::eval(double xi, int order) const {
  const double t = axis_.local(xi);
  const int m = degree_;
  Eigen::VectorXd p(m + 1), dp(m + 1), ddp(m + 1);
  p[0] = 1.0;
  dp[0] = ddp[0] = 0.0;
  if (m >= 1) {
    p[1] = t;
    dp[1] = 1.0;
    ddp[1] = 0.0;
  }
  for (int k = 1; k < m; ++k) {
    const double a = (2.0 * k + 1.0) / (k + 1.0), b = k / (k + 1.0);
    p[k + 1] = a * t * p[k] - b * p[k - 1];
    dp[k + 1] = a * (p[k] + t * dp[k]) - b * dp[k - 1];
    ddp[k + 1] = a * (2.0 * dp[k] + t * ddp[k]) - b * ddp[k - 1];
  }
  const double s = 1.0 / axis_.half_width;
  switch (order) {
    case 0:
      return p;
    case 1:
      return dp * s;
    case 2:
      return ddp * (s * s);
    default:
      fail(ErrorKind::ConfigError, "Basis1D supports derivatives up to order 2");
  }
}

Basis1D legendre_1d(int m, double xi0, double xi1) { return Basis1D(m, xi0, xi1); }

PolyBasis2D::PolyBasis2D(int degree, AffineAxis u_axis, AffineAxis v_axis,
                         const std::vector<Poly2>& funcs)
    : degree_(degree), u_axis_(u_axis), v_axis_(v_axis), coefs_(dim_p(degree), funcs.size()) {
  for (std::size_t j = 0; j < funcs.size(); ++j)
    for (int a = 0; a <= degree; ++a)
      for (int b = 0; b <= degree - a; ++b)
        coefs_(graded_index(degree, a, b), j) = a <= funcs[j].degree() && b <= funcs[j].degree() - a
                                                    ? funcs[j].coef(a, b)
                                                    : 0.0;
}

PolyBasis2D::PolyBasis2D(int degree, AffineAxis u_axis, AffineAxis v_axis,
                         Eigen::MatrixXd monomial_coefs)
    : degree_(degree), u_axis_(u_axis), v_axis_(v_axis), coefs_(std::move(monomial_coefs)) {}

Eigen::VectorXd PolyBasis2D::monomials(double u, double v, int du, int dv) const {
  const int m = degree_;
  const double uh = u_axis_.local(u), vh = v_axis_.local(v);
  Eigen::VectorXd pu(m + 1), pv(m + 1);
  for (int a = 0; a <= m; ++a)
    pu[a] = a < du ? 0.0 : falling_factorial(a, du) * std::pow(uh, a - du);
  for (int b = 0; b <= m; ++b)
    pv[b] = b < dv ? 0.0 : falling_factorial(b, dv) * std::pow(vh, b - dv);
  const double scale = std::pow(u_axis_.half_width, -du) * std::pow(v_axis_.half_width, -dv);
  Eigen::VectorXd out(dim_p(m));
  for (int a = 0; a <= m; ++a)
    for (int b = 0; b <= m - a; ++b) out[graded_index(m, a, b)] = scale * pu[a] * pv[b];
  return out;
}

Eigen::VectorXd PolyBasis2D::eval(double u, double v, int du, int dv) const {
  return coefs_.transpose() * monomials(u, v, du, dv);
}

namespace {

PolyBasis2D eta_power_basis(int m, const FrenetBox& box, AffineAxis eta) {
  if (!(eta.half_width > 0)) fail(ErrorKind::EmptyInterval, "Frenet box has zero eta extent");
  if (!(box.xi1 > box.xi0)) fail(ErrorKind::EmptyInterval, "Frenet box has empty xi range");
  const auto leg = legendre_monomial_tables(m);
  std::vector<Poly2> funcs;
  funcs.reserve(dim_p(m));
  for (int a = 0; a <= m; ++a) {
    std::vector<double> mono(a + 1, 0.0);
    mono[a] = 1.0;
    for (int b = 0; b <= m - a; ++b) funcs.push_back(Poly2::tensor(m, Poly1(mono), leg[b]));
  }
  return PolyBasis2D(m, eta, {box.xi_mid(), 0.5 * (box.xi1 - box.xi0)}, funcs);
}

}  // namespace

PolyBasis2D frenet_monomial_basis(int m, const FrenetBox& box) {
  return eta_power_basis(m, box, {0.5 * (box.eta_min + box.eta_max), 0.5 * (box.eta_max - box.eta_min)});
}

PolyBasis2D interface_monomial_basis(int m, const FrenetBox& box) {
  return eta_power_basis(m, box, {0.0, std::max(std::abs(box.eta_min), std::abs(box.eta_max))});
}

PolyBasis2D legendre_box_basis(int m, const FrenetBox& box) {
  if (!(box.eta_max > box.eta_min) || !(box.xi1 > box.xi0))
    fail(ErrorKind::EmptyInterval, "Frenet box is empty");
  const auto leg = legendre_monomial_tables(m);
  std::vector<Poly2> funcs;
  funcs.reserve(dim_p(m));
  for (int a = 0; a <= m; ++a)
    for (int b = 0; b <= m - a; ++b) funcs.push_back(Poly2::tensor(m, leg[a], leg[b]));
  return PolyBasis2D(m, {0.5 * (box.eta_min + box.eta_max), 0.5 * (box.eta_max - box.eta_min)},
                     {box.xi_mid(), 0.5 * (box.xi1 - box.xi0)}, funcs);
}

namespace {

PolyBasis2D build_reference_basis(int m) {
  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const AffineAxis axis{0.5, 0.5};
  const QuadRule q = triangle_rule(2 * m);
  const int d = dim_p(m);
  MatL V(q.size(), d);
  for (int r = 0; r < q.size(); ++r) {
    const long double u = axis.local(q.x[r].x()), v = axis.local(q.x[r].y());
    const long double sw = std::sqrt(static_cast<long double>(q.w[r]));
    for (int a = 0; a <= m; ++a)
      for (int b = 0; b <= m - a; ++b)
        V(r, graded_index(m, a, b)) = sw * std::pow(u, a) * std::pow(v, b);
  }
  Eigen::HouseholderQR<MatL> qr(V);
  MatL R = qr.matrixQR().topRows(d).template triangularView<Eigen::Upper>();
  for (int i = 0; i < d; ++i)
    if (R(i, i) < 0) R.row(i) *= -1;
  const MatL Rinv = R.template triangularView<Eigen::Upper>().solve(MatL::Identity(d, d));
  return PolyBasis2D(m, axis, axis, Rinv.cast<double>());
}

}  // namespace

const PolyBasis2D& reference_triangle_basis(int m) {
  if (m < 0) fail(ErrorKind::ConfigError, "negative degree");
  static std::mutex mu;
  static std::map<int, PolyBasis2D> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(m);
  if (it == cache.end()) it = cache.emplace(m, build_reference_basis(m)).first;
  return it->second;
}

Eigen::MatrixXd vandermonde(const PolyBasis2D& basis, const std::vector<Vec2>& points, Derivative d) {
  const int du = d == Derivative::DEta ? 1 : 0;
  const int dv = d == Derivative::DXi ? 1 : 0;
  Eigen::MatrixXd mono(points.size(), dim_p(basis.degree()));
  for (std::size_t r = 0; r < points.size(); ++r)
    mono.row(r) = basis.monomials(points[r].x(), points[r].y(), du, dv).transpose();
  return mono * basis.monomial_coefs();
}

}  // namespace gcife
