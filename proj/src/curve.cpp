#include "gcife/curve.hpp"

#include "gcife/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace gcife {

namespace {

constexpr int kPolylineSegments = 512;
constexpr int kSeedSamples = 64;
constexpr int kMaxNewton = 50;

double falling_sign_power(double kappa, int k) {
  // (-kappa)^k with 0^0 = 1
  return k == 0 ? 1.0 : std::pow(-kappa, k);
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

InterfaceCurve::InterfaceCurve(std::string name, double xi_start, double xi_end, bool closed,
                               bool arc_length, bool has_third_derivative, Evaluator eval)
    : name_(std::move(name)),
      xi_start_(xi_start),
      xi_end_(xi_end),
      closed_(closed),
      arc_length_(arc_length),
      has_third_(has_third_derivative),
      eval_(std::move(eval)) {
  if (!(xi_end_ > xi_start_)) fail(ErrorKind::EmptyInterval, "curve parameter interval is empty");
  polyline_.reserve(kPolylineSegments + 1);
  double area2 = 0.0;
  for (int i = 0; i <= kPolylineSegments; ++i) {
    const double xi = xi_start_ + period() * i / kPolylineSegments;
    const CurveJet j = eval_(xi);
    if (j.d1.norm() < 1e-14) fail(ErrorKind::SingularCurve, fmt::format("g'({}) = 0", xi));
    polyline_.push_back(j.g);
    max_abs_curvature_ = std::max(max_abs_curvature_, std::abs(curvature(xi)));
    if (i > 0) area2 += cross(polyline_[i - 1], polyline_[i]);
  }
  if (closed_) orientation_ = area2 >= 0.0 ? 1 : -1;
}

double InterfaceCurve::curvature(double xi) const {
  const CurveJet j = eval_(xi);
  const double s = j.d1.norm();
  return j.d1.dot(apply_q(j.d2)) / (s * s * s);
}

double InterfaceCurve::curvature_derivative(double xi) const {
  if (has_third_) {
    const CurveJet j = eval_(xi);
    const double s2 = j.d1.squaredNorm();
    const double s = std::sqrt(s2);
    const double num = j.d1.dot(apply_q(j.d2));
    const double dnum = j.d1.dot(apply_q(j.d3));
    return dnum / (s2 * s) - 3.0 * num * j.d1.dot(j.d2) / (s2 * s2 * s);
  }
  const double h = 1e-5 * period();
  return (-curvature(xi + 2 * h) + 8 * curvature(xi + h) - 8 * curvature(xi - h) +
          curvature(xi - 2 * h)) /
         (12 * h);
}

double InterfaceCurve::wrap(double xi) const {
  if (!closed_) return xi;
  double w = std::fmod(xi - xi_start_, period());
  if (w < 0) w += period();
  return xi_start_ + w;
}

double InterfaceCurve::unwrap_near(double xi, double ref) const {
  if (!closed_) return xi;
  return xi - period() * std::round((xi - ref) / period());
}

InterfaceCurve make_circle(double cx, double cy, double r) {
  if (!(r > 0)) fail(ErrorKind::ConfigError, "circle radius must be positive");
  const Vec2 c(cx, cy);
  auto eval = [c, r](double t) {
    const double co = std::cos(t), si = std::sin(t);
    return CurveJet{c + r * Vec2(co, si), r * Vec2(-si, co), r * Vec2(-co, -si),
                    r * Vec2(si, -co)};
  };
  return {fmt::format("circle {} {} {}", cx, cy, r), 0.0, 2 * std::numbers::pi, true, r == 1.0,
          true, eval};
}

InterfaceCurve make_ellipse(double cx, double cy, double a, double b) {
  if (!(a > 0 && b > 0)) fail(ErrorKind::ConfigError, "ellipse semi-axes must be positive");
  const Vec2 c(cx, cy);
  auto eval = [c, a, b](double t) {
    const double co = std::cos(t), si = std::sin(t);
    return CurveJet{c + Vec2(a * co, b * si), Vec2(-a * si, b * co), Vec2(-a * co, -b * si),
                    Vec2(a * si, -b * co)};
  };
  return {fmt::format("ellipse {} {} {} {}", cx, cy, a, b), 0.0, 2 * std::numbers::pi, true,
          false, true, eval};
}

InterfaceCurve make_line(double x0, double y0, double dx, double dy, double s0, double s1) {
  const Vec2 p(x0, y0), d(dx, dy);
  if (d.norm() < 1e-14) fail(ErrorKind::SingularCurve, "line direction is zero");
  auto eval = [p, d](double s) {
    return CurveJet{p + s * d, d, Vec2::Zero(), Vec2::Zero()};
  };
  return {fmt::format("line {} {} {} {}", x0, y0, dx, dy), s0, s1, false,
          std::abs(d.norm() - 1.0) < 1e-15, true, eval};
}

InterfaceCurve make_flower(double cx, double cy, double a, double b, int k) {
  if (!(a > std::abs(b))) fail(ErrorKind::ConfigError, "flower needs a > |b|");
  const Vec2 c(cx, cy);
  auto eval = [c, a, b, k](double t) {
    const double kt = k * t;
    const double r = a + b * std::cos(kt);
    const double r1 = -b * k * std::sin(kt);
    const double r2 = -b * k * k * std::cos(kt);
    const double r3 = b * k * k * k * std::sin(kt);
    const Vec2 e(std::cos(t), std::sin(t));
    const Vec2 ep(-e.y(), e.x());
    return CurveJet{c + r * e, r1 * e + r * ep, (r2 - r) * e + 2 * r1 * ep,
                    (r3 - 3 * r1) * e + (3 * r2 - r) * ep};
  };
  return {fmt::format("flower {} {} {} {} {}", cx, cy, a, b, k), 0.0, 2 * std::numbers::pi,
          true, false, true, eval};
}

InterfaceCurve parse_curve(std::string_view spec) {
  std::istringstream in{std::string(spec)};
  std::string kind;
  in >> kind;
  std::vector<double> v;
  for (double x; in >> x;) v.push_back(x);
  if (!in.eof()) fail(ErrorKind::ConfigError, fmt::format("bad number in curve '{}'", spec));
  auto need = [&](std::size_t n) {
    if (v.size() != n)
      fail(ErrorKind::ConfigError,
           fmt::format("curve '{}' expects {} parameters, got {}", kind, n, v.size()));
  };
  if (kind == "circle") {
    need(3);
    return make_circle(v[0], v[1], v[2]);
  }
  if (kind == "ellipse") {
    need(4);
    return make_ellipse(v[0], v[1], v[2], v[3]);
  }
  if (kind == "line") {
    if (v.size() == 6) return make_line(v[0], v[1], v[2], v[3], v[4], v[5]);
    need(4);
    return make_line(v[0], v[1], v[2], v[3]);
  }
  if (kind == "flower") {
    need(5);
    return make_flower(v[0], v[1], v[2], v[3], static_cast<int>(std::lround(v[4])));
  }
  fail(ErrorKind::ConfigError, fmt::format("unknown curve kind '{}'", kind));
}

FrenetFrame frenet_frame(const InterfaceCurve& curve, double xi) {
  const CurveJet j = curve.jet(xi);
  const double s = j.d1.norm();
  if (s < 1e-14) fail(ErrorKind::SingularCurve, fmt::format("|g'({})| < 1e-14", xi));
  FrenetFrame f;
  f.xi = xi;
  f.speed = s;
  f.tangent = j.d1 / s;
  f.normal = apply_q(f.tangent);
  f.curvature = j.d1.dot(apply_q(j.d2)) / (s * s * s);
  return f;
}

Vec2 forward_map(const InterfaceCurve& curve, FrenetPoint p) {
  const FrenetFrame f = frenet_frame(curve, p.xi);
  if (1.0 + p.eta * f.curvature <= kDefaultTubeTol)
    fail(ErrorKind::OutsideTube,
         fmt::format("1 + eta*kappa = {} at (eta, xi) = ({}, {})", 1.0 + p.eta * f.curvature,
                     p.eta, p.xi));
  return curve.point(p.xi) + p.eta * f.normal;
}

namespace {

struct Residual {
  double f;      // (x - g) . tau
  double df;     // dF/dxi = -|g'| (1 + eta kappa)
  double eta;
  double speed;
  double kappa;
};

Residual closest_point_residual(const InterfaceCurve& curve, const Vec2& x, double xi) {
  const CurveJet j = curve.jet(xi);
  const double s = j.d1.norm();
  const Vec2 tau = j.d1 / s;
  const Vec2 r = x - j.g;
  const double kappa = j.d1.dot(apply_q(j.d2)) / (s * s * s);
  const double eta = r.dot(apply_q(tau));
  return {r.dot(tau), -s * (1.0 + eta * kappa), eta, s, kappa};
}

double clamp_param(const InterfaceCurve& c, double xi) {
  return c.closed() ? xi : std::clamp(xi, c.xi_start(), c.xi_end());
}

std::optional<double> newton_closest(const InterfaceCurve& curve, const Vec2& x, double xi) {
  const double scale = 1.0 + x.norm();
  for (int it = 0; it < kMaxNewton; ++it) {
    const Residual r = closest_point_residual(curve, x, xi);
    if (!(r.df < 0.0)) return std::nullopt;
    if (std::abs(r.f) <= 1e-14 * r.speed * scale) {
      // one more step to reach round-off level
      const double next = clamp_param(curve, xi - r.f / r.df);
      const Residual rn = closest_point_residual(curve, x, next);
      return std::abs(rn.f) <= std::abs(r.f) ? next : xi;
    }
    const double next = clamp_param(curve, xi - r.f / r.df);
    if (std::abs(next - xi) <= 4 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(xi))) {
      const Residual rn = closest_point_residual(curve, x, next);
      if (std::abs(rn.f) <= 1e-12 * rn.speed * scale) return next;
      return std::nullopt;
    }
    xi = next;
  }
  return std::nullopt;
}

// Bisection on F over [a, b] with F(a) > 0 > F(b), then Newton polish.
std::optional<double> bracketed_closest(const InterfaceCurve& curve, const Vec2& x, double a,
                                        double b) {
  double fa = closest_point_residual(curve, x, a).f;
  double fb = closest_point_residual(curve, x, b).f;
  if (!(fa >= 0.0 && fb <= 0.0)) return std::nullopt;
  for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
    const double m = 0.5 * (a + b);
    const double fm = closest_point_residual(curve, x, m).f;
    if (fm > 0.0)
      a = m;
    else
      b = m;
  }
  const double mid = 0.5 * (a + b);
  if (auto polished = newton_closest(curve, x, mid)) return polished;
  return mid;
}

}  // namespace

FrenetPoint inverse_map(const InterfaceCurve& curve, const Vec2& x, std::optional<double> hint) {
  auto accept = [&](double xi) -> std::optional<FrenetPoint> {
    const Residual r = closest_point_residual(curve, x, xi);
    if (1.0 + r.eta * r.kappa <= kDefaultTubeTol) return std::nullopt;
    if (std::abs(r.f) > 1e-12 * r.speed * (1.0 + x.norm())) return std::nullopt;
    return FrenetPoint{r.eta, xi};
  };
  auto finish = [&](FrenetPoint p) {
    if (hint)
      p.xi = curve.unwrap_near(p.xi, *hint);
    else
      p.xi = curve.wrap(p.xi);
    return p;
  };

  if (hint) {
    if (auto xi = newton_closest(curve, x, *hint))
      if (auto p = accept(*xi)) return finish(*p);
  }

  // Seed from the nearest uniform sample.
  const double span = curve.period();
  const int n = kSeedSamples;
  const int count = curve.closed() ? n : n + 1;
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < count; ++i) {
    const double xi = curve.xi_start() + span * i / n;
    const double d = (x - curve.point(xi)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  const double h = span / n;
  const double seed = curve.xi_start() + h * best;
  if (auto xi = newton_closest(curve, x, seed))
    if (auto p = accept(*xi)) return finish(*p);

  for (const double lo : {seed - h, seed}) {
    double a = lo, b = lo + h;
    if (!curve.closed()) {
      a = std::max(a, curve.xi_start());
      b = std::min(b, curve.xi_end());
      if (!(b > a)) continue;
    }
    if (auto xi = bracketed_closest(curve, x, a, b)) {
      if (auto p = accept(*xi)) return finish(*p);
      const Residual r = closest_point_residual(curve, x, *xi);
      if (std::abs(r.f) <= 1e-12 * r.speed * (1.0 + x.norm()))
        fail(ErrorKind::OutsideTube,
             fmt::format("point ({}, {}) has 1 + eta*kappa = {}", x.x(), x.y(),
                         1.0 + r.eta * r.kappa));
    }
  }
  fail(ErrorKind::NoConvergence,
       fmt::format("closest-point iteration failed for ({}, {})", x.x(), x.y()));
}

MetricFactors metric_factors(const InterfaceCurve& curve, FrenetPoint p, double tube_tol) {
  const CurveJet j = curve.jet(p.xi);
  const double s2 = j.d1.squaredNorm();
  const double s = std::sqrt(s2);
  const double kappa = j.d1.dot(apply_q(j.d2)) / (s2 * s);
  const double stretch = 1.0 + p.eta * kappa;
  if (stretch <= tube_tol)
    fail(ErrorKind::OutsideTube,
         fmt::format("1 + eta*kappa = {} at (eta, xi) = ({}, {})", stretch, p.eta, p.xi));
  MetricFactors m;
  m.curvature_derivative = curve.curvature_derivative(p.xi);
  m.psi = 1.0 / stretch;
  m.rho = m.psi / s;
  m.j0 = m.rho * m.rho;
  m.j1 = kappa * m.psi;
  m.j2 = -m.j0 * (p.eta * m.curvature_derivative * m.psi + j.d1.dot(j.d2) / s2);
  return m;
}

MetricEtaDerivatives metric_eta_derivatives(const InterfaceCurve& curve, double xi,
                                            int max_order) {
  const CurveJet j = curve.jet(xi);
  const double s2 = j.d1.squaredNorm();
  const double s = std::sqrt(s2);
  const double kappa = j.d1.dot(apply_q(j.d2)) / (s2 * s);
  const double dkappa = curve.curvature_derivative(xi);
  const double a = j.d1.dot(j.d2) / s2;

  MetricEtaDerivatives d;
  d.j0.resize(max_order + 1);
  d.j1.resize(max_order + 1);
  d.j2.resize(max_order + 1);
  for (int k = 0; k <= max_order; ++k) {
    const double pk = falling_sign_power(kappa, k);
    // d^k/deta^k psi^p at eta = 0 is (-kappa)^k p (p+1) ... (p+k-1)
    d.j0[k] = pk * factorial(k + 1) / s2;
    d.j1[k] = kappa * pk * factorial(k);
    const double eta_psi3 = k == 0 ? 0.0 : k * falling_sign_power(kappa, k - 1) * factorial(k + 1) / 2;
    d.j2[k] = -(dkappa * eta_psi3 + a * pk * factorial(k + 1)) / s2;
  }
  return d;
}

double frenet_laplacian(const InterfaceCurve& curve, const FrenetDerivatives& d, FrenetPoint p) {
  const MetricFactors m = metric_factors(curve, p);
  return d.u_eta_eta + m.j0 * d.u_xi_xi + m.j1 * d.u_eta + m.j2 * d.u_xi;
}

Vec2 physical_gradient(const InterfaceCurve& curve, double u_eta, double u_xi, FrenetPoint p) {
  const FrenetFrame f = frenet_frame(curve, p.xi);
  const double stretch = 1.0 + p.eta * f.curvature;
  if (stretch <= kDefaultTubeTol)
    fail(ErrorKind::OutsideTube, fmt::format("1 + eta*kappa = {}", stretch));
  const double rho = 1.0 / (f.speed * stretch);
  return u_eta * f.normal + rho * u_xi * f.tangent;
}

double polyline_distance(const InterfaceCurve& curve, const Vec2& x) {
  const auto& pts = curve.polyline();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const Vec2 d = pts[i] - pts[i - 1];
    const double t = std::clamp((x - pts[i - 1]).dot(d) / d.squaredNorm(), 0.0, 1.0);
    best = std::min(best, (x - pts[i - 1] - t * d).squaredNorm());
  }
  return std::sqrt(best);
}

int coarse_side(const InterfaceCurve& curve, const Vec2& x) {
  const auto& pts = curve.polyline();
  if (curve.closed()) {
    bool inside = false;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const Vec2& a = pts[i - 1];
      const Vec2& b = pts[i];
      if ((a.y() > x.y()) != (b.y() > x.y())) {
        const double xc = a.x() + (x.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
        if (x.x() < xc) inside = !inside;
      }
    }
    // n = Q tau points to the right of the direction of travel.
    return inside ? -curve.orientation() : curve.orientation();
  }
  std::size_t best_i = 1;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const Vec2 d = pts[i] - pts[i - 1];
    const double t = std::clamp((x - pts[i - 1]).dot(d) / d.squaredNorm(), 0.0, 1.0);
    const double dist = (x - pts[i - 1] - t * d).squaredNorm();
    if (dist < best) {
      best = dist;
      best_i = i;
    }
  }
  const Vec2 d = pts[best_i] - pts[best_i - 1];
  return cross(d, x - pts[best_i - 1]) > 0.0 ? -1 : 1;
}

}  // namespace gcife
