#include "gcife/assembly.hpp"

#include "gcife/errors.hpp"
#include "gcife/parallel.hpp"
#include "gcife/poly_basis.hpp"
#include "gcife/quadrature.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace gcife {

namespace {

constexpr double kIllConditioned = 1e12;

BasisValues eval_affine(const std::array<Vec2, 3>& K, int m, const std::vector<Vec2>& x) {
  Eigen::Matrix2d jac;
  jac.col(0) = K[1] - K[0];
  jac.col(1) = K[2] - K[0];
  const Eigen::Matrix2d inv = jac.inverse();
  std::vector<Vec2> ref;
  ref.reserve(x.size());
  for (const Vec2& p : x) ref.push_back(inv * (p - K[0]));
  const PolyBasis2D& b = reference_triangle_basis(m);
  const Eigen::MatrixXd dr = vandermonde(b, ref, Derivative::DEta);
  const Eigen::MatrixXd ds = vandermonde(b, ref, Derivative::DXi);
  // grad = J^{-T} (d/dr, d/ds)
  return {vandermonde(b, ref), inv(0, 0) * dr + inv(1, 0) * ds, inv(0, 1) * dr + inv(1, 1) * ds};
}

}  // namespace

ElementRule element_rule(const TriMesh& mesh, const InterfaceCurve& curve, const ElementInfo& info,
                         int k, int n) {
  ElementRule r;
  if (!info.is_interface()) {
    const QuadRule q = triangle_rule(2 * n - 2, mesh.corners(k));
    r.x = q.x;
    r.w = q.w;
    r.side.assign(q.size(), info.kind == ElementKind::NoninterfaceMinus ? Side::Minus : Side::Plus);
    return r;
  }
  for (Side s : {Side::Minus, Side::Plus}) {
    const QuadRule q = cut_subelement_rule(curve, info, s, n, mesh.area(k));
    r.x.insert(r.x.end(), q.x.begin(), q.x.end());
    r.w.insert(r.w.end(), q.w.begin(), q.w.end());
    r.side.insert(r.side.end(), q.size(), s);
  }
  r.frenet.reserve(r.x.size());
  for (const Vec2& x : r.x) r.frenet.push_back(inverse_map(curve, x, info.xi_ref));
  return r;
}

IfeSpace::IfeSpace(const TriMesh& mesh, const InterfaceCurve& curve, SpaceOptions opt)
    : IfeSpace(mesh, curve, classify(mesh, curve), opt) {}

IfeSpace::IfeSpace(const TriMesh& mesh, const InterfaceCurve& curve, Classification cls,
                   SpaceOptions opt)
    : mesh_(&mesh), curve_(&curve), cls_(std::move(cls)), opt_(opt) {
  if (opt_.degree < 1 || opt_.degree > 9)
    fail(ErrorKind::ConfigError, fmt::format("degree {} outside 1..9", opt_.degree));
  if (!(opt_.beta.minus > 0) || !(opt_.beta.plus > 0))
    fail(ErrorKind::ConfigError, "coefficients must be positive");
  build();
}

int IfeSpace::volume_points() const { return opt_.volume_points > 0 ? opt_.volume_points : opt_.degree + 2; }

void IfeSpace::build() {
  const int ne = num_elements();
  const int m = opt_.degree;
  rules_.resize(ne);
  ife_index_.assign(ne, -1);
  std::vector<std::optional<IfeBasis>> bases(ne);
  parallel_for(ne, opt_.threads, [&](int k) {
    const ElementInfo& info = cls_.elements[k];
    rules_[k] = element_rule(*mesh_, *curve_, info, k, volume_points());
    if (!info.is_interface()) return;
    BuildOptions bo;
    bo.element = k;
    bo.interface_points = opt_.interface_points;
    IfeBasis b = opt_.construction == Construction::Initial
                     ? initial_construction(*curve_, info, m, opt_.beta, bo)
                     : general_construction(*curve_, info, m, opt_.beta, std::nullopt, bo);
    if (opt_.construction == Construction::Recon1 || opt_.construction == Construction::Recon2) {
      const auto f = side_factors(*curve_, b, rules_[k]);
      b = opt_.construction == Construction::Recon1 ? reconstruct_1(b, local_mass(b, f))
                                                     : reconstruct_2(b, weighted_vandermonde(b, f));
    }
    bases[k] = std::move(b);
  });
  for (int k = 0; k < ne; ++k) {
    if (!bases[k]) continue;
    ife_index_[k] = static_cast<int>(ife_.size());
    ife_.push_back(std::move(*bases[k]));
  }
}

const IfeBasis& IfeSpace::ife_basis(int k) const {
  if (ife_index_[k] < 0) fail(ErrorKind::GeometryError, fmt::format("element {} is not an interface element", k));
  return ife_[ife_index_[k]];
}

Side IfeSpace::element_side(int k) const {
  return cls_.elements[k].kind == ElementKind::NoninterfaceMinus ? Side::Minus : Side::Plus;
}

BasisValues IfeSpace::evaluate(int k, const std::vector<Vec2>& x, const std::vector<Side>& side) const {
  if (is_interface(k)) return eval_ife(*curve_, ife_basis(k), x, &side);
  return eval_affine(mesh_->corners(k), opt_.degree, x);
}

BasisValues IfeSpace::evaluate(int k, const ElementRule& r) const {
  if (is_interface(k)) {
    if (static_cast<int>(r.frenet.size()) == r.size()) return eval_ife(*curve_, ife_basis(k), r.frenet, r.side);
    return eval_ife(*curve_, ife_basis(k), r.x, &r.side);
  }
  return eval_affine(mesh_->corners(k), opt_.degree, r.x);
}

std::array<SideFactors, 2> side_factors(const InterfaceCurve& curve, const IfeBasis& basis,
                                        const ElementRule& rule) {
  std::array<SideFactors, 2> f;
  const std::vector<FrenetPoint> p =
      static_cast<int>(rule.frenet.size()) == rule.size() ? rule.frenet : frenet_points(curve, basis, rule.x);
  for (Side s : {Side::Minus, Side::Plus}) {
    SideFactors& sf = f[static_cast<int>(s)];
    std::vector<Vec2> pts;
    std::vector<double> w, w2;
    for (int q = 0; q < rule.size(); ++q) {
      if (rule.side[q] != s) continue;
      pts.emplace_back(p[q].eta, p[q].xi);
      w.push_back(rule.w[q]);
      const MetricFactors mf = metric_factors(curve, p[q]);
      w2.push_back(rule.w[q] * mf.rho * mf.rho);
      sf.x.push_back(rule.x[q]);
    }
    sf.l = vandermonde(basis.frenet, pts);
    sf.l_eta = vandermonde(basis.frenet, pts, Derivative::DEta);
    sf.l_xi = vandermonde(basis.frenet, pts, Derivative::DXi);
    sf.w = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
    sf.w_rho2 = Eigen::Map<const Eigen::VectorXd>(w2.data(), w2.size());
  }
  return f;
}

Eigen::MatrixXd local_mass(const IfeBasis& basis, const std::array<SideFactors, 2>& f) {
  const int d = basis.size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  for (Side s : {Side::Minus, Side::Plus}) {
    const SideFactors& sf = f[static_cast<int>(s)];
    const Eigen::MatrixXd lc = sf.l * basis.c(s);
    m += lc.transpose() * sf.w.asDiagonal() * lc;
  }
  return m;
}

Eigen::MatrixXd local_stiffness(const IfeBasis& basis, const std::array<SideFactors, 2>& f) {
  const int d = basis.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (Side s : {Side::Minus, Side::Plus}) {
    const SideFactors& sf = f[static_cast<int>(s)];
    const Eigen::MatrixXd le = sf.l_eta * basis.c(s);
    const Eigen::MatrixXd lx = sf.l_xi * basis.c(s);
    a += basis.beta[s] *
         (le.transpose() * sf.w.asDiagonal() * le + lx.transpose() * sf.w_rho2.asDiagonal() * lx);
  }
  return a;
}

Eigen::VectorXd local_load(const IfeBasis& basis, const std::array<SideFactors, 2>& f,
                           const SideFunction& source) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(basis.size());
  for (Side s : {Side::Minus, Side::Plus}) {
    const SideFactors& sf = f[static_cast<int>(s)];
    Eigen::VectorXd r(sf.x.size());
    for (std::size_t q = 0; q < sf.x.size(); ++q) r[q] = sf.w[q] * source(sf.x[q], s);
    b += basis.c(s).transpose() * (sf.l.transpose() * r);
  }
  return b;
}

Eigen::MatrixXd weighted_vandermonde(const IfeBasis& basis, const std::array<SideFactors, 2>& f) {
  const SideFactors& fm = f[0];
  const SideFactors& fp = f[1];
  Eigen::MatrixXd v(fm.l.rows() + fp.l.rows(), basis.size());
  v.topRows(fm.l.rows()) = fm.w.cwiseSqrt().asDiagonal() * (fm.l * basis.c(Side::Minus));
  v.bottomRows(fp.l.rows()) = fp.w.cwiseSqrt().asDiagonal() * (fp.l * basis.c(Side::Plus));
  return v;
}

LocalMatrices local_matrices(const IfeSpace& space, int k, const SideFunction* source) {
  LocalMatrices out;
  const ElementRule& r = space.rule(k);
  if (space.is_interface(k)) {
    const IfeBasis& b = space.ife_basis(k);
    const auto f = side_factors(space.curve(), b, r);
    out.mass = local_mass(b, f);
    out.stiffness = local_stiffness(b, f);
    if (source) out.load = local_load(b, f, *source);
    return out;
  }
  const BasisValues v = space.evaluate(k, r);
  const Eigen::Map<const Eigen::VectorXd> w(r.w.data(), r.size());
  const double beta = space.options().beta[space.element_side(k)];
  out.mass = v.value.transpose() * w.asDiagonal() * v.value;
  out.stiffness = beta * (v.dx.transpose() * w.asDiagonal() * v.dx + v.dy.transpose() * w.asDiagonal() * v.dy);
  if (source) {
    Eigen::VectorXd rhs(r.size());
    for (int q = 0; q < r.size(); ++q) rhs[q] = w[q] * (*source)(r.x[q], r.side[q]);
    out.load = v.value.transpose() * rhs;
  }
  return out;
}

ConditionReport condition_report(const IfeSpace& space) {
  ConditionReport rep;
  const int ne = space.num_elements();
  rep.element_cond.resize(ne);
  std::vector<std::array<double, 2>> extremes(ne);
  parallel_for(ne, space.options().threads, [&](int k) {
    const Eigen::MatrixXd m = local_matrices(space, k).mass;
    const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
    rep.element_cond[k] = s[s.size() - 1] > 0 ? s[0] / s[s.size() - 1] : std::numeric_limits<double>::infinity();
    extremes[k] = {s[s.size() - 1], s[0]};
  });
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int k = 0; k < ne; ++k) {
    const double c = rep.element_cond[k];
    lo = std::min(lo, extremes[k][0]);
    hi = std::max(hi, extremes[k][1]);
    if (space.is_interface(k)) {
      rep.max_interface = std::max(rep.max_interface, c);
      ++rep.num_interface;
    } else {
      rep.max_noninterface = std::max(rep.max_noninterface, c);
    }
    rep.global = std::max(rep.global, c);
  }
  rep.spectral = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
  return rep;
}

Projection l2_project(const IfeSpace& space, const SideFunction& u) {
  const int d = space.local_dim();
  const int ne = space.num_elements();
  Projection p;
  p.coefs.resize(space.num_dofs());
  std::vector<double> cond(ne);
  parallel_for(ne, space.options().threads, [&](int k) {
    const LocalMatrices lm = local_matrices(space, k, &u);
    cond[k] = condition_number(lm.mass);
    Eigen::LLT<Eigen::MatrixXd> llt(lm.mass);
    if (llt.info() == Eigen::Success) {
      p.coefs.segment(k * d, d) = llt.solve(lm.load);
    } else {
      p.coefs.segment(k * d, d) = lm.mass.ldlt().solve(lm.load);
    }
  });
  for (double c : cond) {
    p.max_cond = std::max(p.max_cond, c);
    if (c > kIllConditioned) ++p.ill_conditioned;
  }
  return p;
}

}  // namespace gcife
