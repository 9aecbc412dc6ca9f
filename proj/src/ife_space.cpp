#include "gcife/ife_space.hpp"

#include "gcife/errors.hpp"
#include "gcife/quadrature.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gcife {

namespace {

constexpr double kMaxSystemCond = 1e14;
constexpr double kMaxJumpResidual = 1e-8;
constexpr double kRankTol = 1e-14;
// Negative mass eigenvalues this small relative to the largest are round-off.
constexpr double kRoundoffEigen = 1e-12;

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

Eigen::VectorXd row_scales(const Eigen::MatrixXd& a) {
  Eigen::VectorXd s(a.rows());
  for (int r = 0; r < a.rows(); ++r) {
    const double mx = a.row(r).cwiseAbs().maxCoeff();
    s[r] = mx > 0 ? 1.0 / mx : 1.0;
  }
  return s;
}

int points_or_default(int n, int m) { return n > 0 ? n : m + 2; }

void sign_fix(Eigen::MatrixXd& v) {
  for (int j = 0; j < v.cols(); ++j) {
    Eigen::Index i;
    v.col(j).cwiseAbs().maxCoeff(&i);
    if (v(i, j) < 0) v.col(j) *= -1.0;
  }
}

void check_residuals(const InterfaceCurve& curve, const IfeBasis& b, int gauss_points) {
  const double r = jump_residuals(curve, b, gauss_points).max();
  if (!(r <= kMaxJumpResidual))
    fail(ErrorKind::JumpResidualFailure,
         fmt::format("element {}: jump residual {:.3e} after {} construction", b.element, r,
                     to_string(b.construction)));
}

IfeBasis empty_basis(const ElementInfo& elem, int m, Coefficients beta, Construction c,
                     const BuildOptions& opt) {
  if (m < 1) fail(ErrorKind::ConfigError, fmt::format("degree must be at least 1, got {}", m));
  if (!elem.is_interface()) fail(ErrorKind::GeometryError, "IFE basis requested on a non-interface element");
  IfeBasis b;
  b.element = opt.element;
  b.degree = m;
  b.construction = c;
  b.beta = beta;
  b.box = elem.box;
  b.xi_ref = elem.xi_ref;
  if (c == Construction::Initial) {
    b.frenet = interface_monomial_basis(m, elem.box);
  } else if (opt.frenet) {
    if (opt.frenet->degree() != m) fail(ErrorKind::ConfigError, "Frenet basis degree does not match m");
    b.frenet = *opt.frenet;
  } else {
    b.frenet = frenet_monomial_basis(m, elem.box);
  }
  return b;
}

Side larger_side(const InterfaceCurve& curve, const ElementInfo& elem) {
  const double minus = cut_subelement_rule(curve, elem, Side::Minus, 3, 0.0).measure();
  const double plus = cut_subelement_rule(curve, elem, Side::Plus, 3, 0.0).measure();
  return minus >= plus ? Side::Minus : Side::Plus;
}

}  // namespace

std::string_view to_string(Construction c) {
  switch (c) {
    case Construction::Initial: return "initial";
    case Construction::General: return "general";
    case Construction::Recon1: return "recon1";
    case Construction::Recon2: return "recon2";
  }
  return "?";
}

Construction parse_construction(std::string_view s) {
  for (Construction c : {Construction::Initial, Construction::General, Construction::Recon1,
                         Construction::Recon2})
    if (to_string(c) == s) return c;
  fail(ErrorKind::ConfigError, fmt::format("unknown construction '{}'", s));
}

double condition_number(const Eigen::MatrixXd& a) {
  const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues();
  const double lo = s[s.size() - 1];
  return lo > 0 ? s[0] / lo : std::numeric_limits<double>::infinity();
}

ConstraintSystem constraint_system(const InterfaceCurve& curve, const PolyBasis2D& frenet,
                                   const FrenetBox& box, Coefficients beta, int gauss_points) {
  const int m = frenet.degree();
  const int d = dim_p(m);
  ConstraintSystem sys;
  sys.num_continuity = m + 1;
  sys.num_flux = m;
  sys.num_extended = m * (m - 1) / 2;
  if (sys.num_continuity + sys.num_flux + sys.num_extended != d)
    fail(ErrorKind::SingularSystem, "constraint count does not match the space dimension");
  sys.a = Eigen::MatrixXd::Zero(d, d);
  sys.j = Eigen::VectorXd::Constant(d, beta.minus / beta.plus);
  sys.j.head(m + 1).setOnes();

  const Basis1D p(m, box.xi0, box.xi1);
  const InterfaceQuad q = interface_rule(box.xi0, box.xi1, gauss_points);
  std::vector<std::array<Eigen::VectorXd, 3>> dr(m + 1);
  for (int node = 0; node < q.size(); ++node) {
    const double xi = q.xi[node], w = q.w[node];
    const Eigen::VectorXd pk = p.eval(xi);
    for (int a = 0; a <= m; ++a)
      for (int b = 0; b <= 2; ++b) dr[a][b] = frenet.eval(0.0, xi, a, b);
    for (int k = 0; k <= m; ++k) sys.a.row(k) += w * pk[k] * dr[0][0].transpose();
    for (int k = 0; k < m; ++k) sys.a.row(m + 1 + k) += w * pk[k] * dr[1][0].transpose();
    if (m < 2) continue;
    const MetricEtaDerivatives md = metric_eta_derivatives(curve, xi, m - 2);
    int row = 2 * m + 1;
    for (int n = 0; n <= m - 2; ++n) {
      Eigen::VectorXd ln = dr[n + 2][0];
      for (int k = 0; k <= n; ++k)
        ln += binomial(n, k) * (md.j0[k] * dr[n - k][2] + md.j1[k] * dr[n - k + 1][0] +
                                md.j2[k] * dr[n - k][1]);
      for (int k = 0; k <= m - 2 - n; ++k) sys.a.row(row++) += w * pk[k] * ln.transpose();
    }
  }
  return sys;
}

InitialSystem initial_system(const ConstraintSystem& sys, int m) {
  InitialSystem out;
  for (int a = 2; a <= m; ++a)
    for (int b = 0; b <= m - a; ++b) out.unknowns.push_back(graded_index(m, a, b));
  const int l = static_cast<int>(out.unknowns.size());
  const int first = sys.num_continuity + sys.num_flux;
  out.a.resize(l, l);
  out.b.resize(l, m + 1);
  for (int r = 0; r < l; ++r) {
    for (int c = 0; c < l; ++c) out.a(r, c) = sys.a(first + r, out.unknowns[c]);
    for (int i = 0; i <= m; ++i) out.b(r, i) = sys.a(first + r, graded_index(m, 0, i));
  }
  return out;
}

IfeBasis initial_construction(const InterfaceCurve& curve, const ElementInfo& elem, int m,
                              Coefficients beta, const BuildOptions& opt) {
  IfeBasis b = empty_basis(elem, m, beta, Construction::Initial, opt);
  const int d = dim_p(m);
  const int gp = points_or_default(opt.interface_points, m);
  b.coef[0] = Eigen::MatrixXd::Zero(d, d);
  b.coef[1] = Eigen::MatrixXd::Zero(d, d);
  for (int a = 0; a <= m; ++a)
    for (int j = 0; j <= m - a; ++j) {
      const int g = graded_index(m, a, j);
      b.coef[0](g, g) = a == 0 ? 1.0 : 1.0 / beta.minus;
      b.coef[1](g, g) = a == 0 ? 1.0 : 1.0 / beta.plus;
    }
  if (m >= 2) {
    const ConstraintSystem sys = constraint_system(curve, b.frenet, b.box, beta, gp);
    const InitialSystem init = initial_system(sys, m);
    const Eigen::VectorXd s = row_scales(init.a);
    const Eigen::MatrixXd a = s.asDiagonal() * init.a;
    const double c = condition_number(a);
    if (!(c <= kMaxSystemCond))
      fail(ErrorKind::SingularSystem, fmt::format("element {}: initial system condition {:.3e}", opt.element, c));
    const double factor = (beta.minus - beta.plus) / beta.plus;
    const Eigen::MatrixXd x = a.partialPivLu().solve(factor * (s.asDiagonal() * init.b));
    for (int i = 0; i <= m; ++i)
      for (std::size_t l = 0; l < init.unknowns.size(); ++l)
        b.coef[1](init.unknowns[l], graded_index(m, 0, i)) += x(l, i);
  }
  check_residuals(curve, b, gp);
  return b;
}

IfeBasis general_construction(const InterfaceCurve& curve, const ElementInfo& elem, int m,
                              Coefficients beta, const std::optional<Eigen::MatrixXd>& seed,
                              const BuildOptions& opt) {
  IfeBasis b = empty_basis(elem, m, beta, Construction::General, opt);
  const int d = dim_p(m);
  const int gp = points_or_default(opt.interface_points, m);
  const Side from = opt.seed_side ? *opt.seed_side : larger_side(curve, elem);
  const int src = static_cast<int>(from);
  b.coef[src] = seed ? *seed : Eigen::MatrixXd::Identity(d, d);
  if (b.coef[src].rows() != d || b.coef[src].cols() != d)
    fail(ErrorKind::ConfigError, fmt::format("seed must be {0}x{0}", d));
  const ConstraintSystem sys = constraint_system(curve, b.frenet, b.box, beta, gp);
  const Eigen::VectorXd s = row_scales(sys.a);
  const Eigen::MatrixXd a = s.asDiagonal() * sys.a;
  const double c = condition_number(a);
  if (!(c <= kMaxSystemCond))
    fail(ErrorKind::SingularSystem, fmt::format("element {}: constraint system condition {:.3e}", opt.element, c));
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const Eigen::VectorXd j = from == Side::Minus ? sys.j : Eigen::VectorXd(sys.j.cwiseInverse());
  b.coef[1 - src] = lu.solve(j.asDiagonal() * (a * b.coef[src]));
  check_residuals(curve, b, gp);
  return b;
}

IfeBasis transform(const IfeBasis& basis, const Eigen::MatrixXd& q, Construction tag) {
  IfeBasis out = basis;
  out.construction = tag;
  out.coef[0] = basis.coef[0] * q;
  out.coef[1] = basis.coef[1] * q;
  return out;
}

IfeBasis reconstruct_1(const IfeBasis& basis, const Eigen::MatrixXd& mass) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (mass + mass.transpose()));
  if (eig.info() != Eigen::Success) fail(ErrorKind::IndefiniteMass, "eigensolver failed");
  const int d = static_cast<int>(mass.rows());
  const Eigen::VectorXd lam = eig.eigenvalues();
  const double top = lam.cwiseAbs().maxCoeff();
  Eigen::MatrixXd v(d, d);
  Eigen::VectorXd scale(d);
  // descending order, as in the SVD used by the second reconstruction
  for (int i = 0; i < d; ++i) {
    const int src = d - 1 - i;
    const double l = lam[src];
    if (l < -kRoundoffEigen * top || l == 0.0)
      fail(ErrorKind::IndefiniteMass,
           fmt::format("element {}: mass eigenvalue {:.3e} (largest {:.3e})", basis.element, l, top));
    v.col(i) = eig.eigenvectors().col(src);
    scale[i] = 1.0 / std::sqrt(std::abs(l));
  }
  sign_fix(v);
  return transform(basis, v * scale.asDiagonal(), Construction::Recon1);
}

IfeBasis reconstruct_2(const IfeBasis& basis, const Eigen::MatrixXd& weighted_vandermonde) {
  const int d = basis.size();
  if (weighted_vandermonde.rows() < d || weighted_vandermonde.cols() != d)
    fail(ErrorKind::RankDeficient, fmt::format("weighted Vandermonde is {}x{}, need at least {} rows",
                                               weighted_vandermonde.rows(), weighted_vandermonde.cols(), d));
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(weighted_vandermonde, Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  if (!(s[d - 1] >= kRankTol * s[0]))
    fail(ErrorKind::RankDeficient,
         fmt::format("element {}: singular value ratio {:.3e}", basis.element, s[d - 1] / s[0]));
  Eigen::MatrixXd v = svd.matrixV();
  sign_fix(v);
  return transform(basis, v * s.cwiseInverse().asDiagonal(), Construction::Recon2);
}

std::vector<FrenetPoint> frenet_points(const InterfaceCurve& curve, const IfeBasis& basis,
                                       const std::vector<Vec2>& x) {
  std::vector<FrenetPoint> p;
  p.reserve(x.size());
  for (const Vec2& xi : x) p.push_back(inverse_map(curve, xi, basis.xi_ref));
  return p;
}

BasisValues eval_ife(const InterfaceCurve& curve, const IfeBasis& basis,
                     const std::vector<FrenetPoint>& p, const std::vector<Side>& sides) {
  const int n = static_cast<int>(p.size()), d = basis.size();
  BasisValues out{Eigen::MatrixXd(n, d), Eigen::MatrixXd(n, d), Eigen::MatrixXd(n, d)};
  for (int q = 0; q < n; ++q) {
    const Eigen::MatrixXd& c = basis.c(sides[q]);
    const FrenetFrame f = frenet_frame(curve, p[q].xi);
    const double stretch = 1.0 + p[q].eta * f.curvature;
    if (stretch <= kDefaultTubeTol)
      fail(ErrorKind::OutsideTube, fmt::format("1 + eta*kappa = {} in element {}", stretch, basis.element));
    const double rho = 1.0 / (f.speed * stretch);
    const Eigen::RowVectorXd v = basis.frenet.eval(p[q].eta, p[q].xi).transpose() * c;
    const Eigen::RowVectorXd ve = basis.frenet.eval(p[q].eta, p[q].xi, 1, 0).transpose() * c;
    const Eigen::RowVectorXd vx = rho * basis.frenet.eval(p[q].eta, p[q].xi, 0, 1).transpose() * c;
    out.value.row(q) = v;
    out.dx.row(q) = f.normal.x() * ve + f.tangent.x() * vx;
    out.dy.row(q) = f.normal.y() * ve + f.tangent.y() * vx;
  }
  return out;
}

BasisValues eval_ife(const InterfaceCurve& curve, const IfeBasis& basis, const std::vector<Vec2>& x,
                     const std::vector<Side>* sides) {
  const std::vector<FrenetPoint> p = frenet_points(curve, basis, x);
  std::vector<Side> s;
  if (sides) {
    s = *sides;
  } else {
    for (const FrenetPoint& fp : p) s.push_back(fp.eta > 0 ? Side::Plus : Side::Minus);
  }
  return eval_ife(curve, basis, p, s);
}

double JumpResiduals::max() const {
  double r = 0.0;
  for (const Eigen::VectorXd* v : {&continuity, &flux, &extended})
    if (v->size() > 0) r = std::max(r, v->maxCoeff());
  return r;
}

JumpResiduals jump_residuals(const InterfaceCurve& curve, const IfeBasis& basis, int gauss_points) {
  const int m = basis.degree;
  const ConstraintSystem sys =
      constraint_system(curve, basis.frenet, basis.box, basis.beta, points_or_default(gauss_points, m));
  const Eigen::MatrixXd a = row_scales(sys.a).asDiagonal() * sys.a;
  const Eigen::MatrixXd r = a * basis.c(Side::Plus) - sys.j.asDiagonal() * (a * basis.c(Side::Minus));
  const Eigen::MatrixXd scale = a.cwiseAbs() * basis.c(Side::Plus).cwiseAbs() +
                                sys.j.asDiagonal() * (a.cwiseAbs() * basis.c(Side::Minus).cwiseAbs());
  const int d = basis.size();
  // each column is measured against its largest constraint term
  Eigen::MatrixXd rel(d, d);
  for (int j = 0; j < d; ++j) {
    const double top = scale.col(j).maxCoeff();
    rel.col(j) = top > 0 ? Eigen::VectorXd(r.col(j).cwiseAbs() / top) : Eigen::VectorXd(r.col(j).cwiseAbs());
  }
  auto family = [&](int first, int count) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
    if (count > 0) v = rel.middleRows(first, count).colwise().maxCoeff().transpose();
    return v;
  };
  JumpResiduals out;
  out.continuity = family(0, sys.num_continuity);
  out.flux = family(sys.num_continuity, sys.num_flux);
  out.extended = family(sys.num_continuity + sys.num_flux, sys.num_extended);
  return out;
}

}  // namespace gcife
