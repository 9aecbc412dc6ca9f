#include "gcife/quadrature.hpp"

#include "gcife/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>

namespace gcife {

namespace {

Rule1D compute_gauss(int n) {
  Rule1D r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    r.x[i] = -x;
    r.x[n - 1 - i] = x;
    r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return r;
}

const Rule1D& reference_gauss(int n) {
  static std::mutex mu;
  static std::map<int, Rule1D> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss(n)).first;
  return it->second;
}

}  // namespace

Rule1D gauss_interval(int n, double a, double b) {
  if (n < 1) fail(ErrorKind::ConfigError, "Gauss rule needs n >= 1");
  Rule1D r = reference_gauss(n);
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    r.x[i] = c + h * r.x[i];
    r.w[i] *= h;
  }
  return r;
}

double QuadRule::measure() const { return std::accumulate(w.begin(), w.end(), 0.0); }

void QuadRule::append(const QuadRule& other) {
  x.insert(x.end(), other.x.begin(), other.x.end());
  w.insert(w.end(), other.w.begin(), other.w.end());
}

namespace {

QuadRule duffy(int n, const Vec2& a, const Vec2& b, const Vec2& c) {
  const Rule1D g = gauss_interval(n, 0.0, 1.0);
  const double jac = std::abs(cross(b - a, c - a));
  QuadRule q;
  q.x.reserve(n * n);
  q.w.reserve(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double u = g.x[i], v = g.x[j];
      q.x.push_back(a + u * ((b - a) + v * (c - b)));
      q.w.push_back(g.w[i] * g.w[j] * u * jac);
    }
  return q;
}

}  // namespace

QuadRule triangle_rule(int degree, const std::array<Vec2, 3>& K) {
  if (degree < 0) fail(ErrorKind::ConfigError, "quadrature degree must be nonnegative");
  const int n = (degree + 3) / 2;  // ceil((degree + 2) / 2)
  QuadRule q = duffy(n, K[0], K[1], K[2]);
  q.degree = degree;
  return q;
}

QuadRule triangle_rule(int degree) {
  return triangle_rule(degree, {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)});
}

QuadRule patch_rule(const InterfaceCurve& curve, const Patch& patch, int n) {
  if (patch.kind == Patch::Kind::Triangle) {
    QuadRule q = duffy(n, patch.corners[0], patch.corners[1], patch.corners[2]);
    q.degree = 2 * n - 2;
    return q;
  }
  const Rule1D g = gauss_interval(n, 0.0, 1.0);
  const double dxi = patch.xi_b - patch.xi_a;
  QuadRule q;
  q.degree = 2 * n - 2;
  q.x.reserve(n * n);
  q.w.reserve(n * n);
  std::vector<double> det;
  det.reserve(n * n);
  for (int i = 0; i < n; ++i) {
    const double s = g.x[i];
    for (int j = 0; j < n; ++j) {
      const double t = g.x[j];
      Vec2 x, ds, dt;
      if (patch.kind == Patch::Kind::Cone) {
        // x = A + s (gamma(t) - A)
        const CurveJet jet = curve.jet(patch.xi_a + t * dxi);
        const Vec2& A = patch.corners[0];
        x = A + s * (jet.g - A);
        ds = jet.g - A;
        dt = s * dxi * jet.d1;
      } else {
        // bilinear(B, C, Q, P) + t (arc(s) - chord(s))
        const Vec2& B = patch.corners[0];
        const Vec2& C = patch.corners[1];
        const Vec2& Q = patch.corners[2];
        const Vec2& P = patch.corners[3];
        const CurveJet jet = curve.jet(patch.xi_a + s * dxi);
        const Vec2 chord = P + s * (Q - P);
        x = (1 - s) * (1 - t) * B + s * (1 - t) * C + s * t * Q + (1 - s) * t * P + t * (jet.g - chord);
        ds = (1 - t) * (C - B) + t * dxi * jet.d1;
        dt = jet.g - ((1 - s) * B + s * C);
      }
      q.x.push_back(x);
      det.push_back(cross(ds, dt));
      q.w.push_back(g.w[i] * g.w[j]);
    }
  }
  const double dmax = std::abs(*std::max_element(det.begin(), det.end(), [](double a, double b) {
    return std::abs(a) < std::abs(b);
  }));
  const bool pos = std::any_of(det.begin(), det.end(), [&](double d) { return d > 1e-12 * dmax; });
  const bool neg = std::any_of(det.begin(), det.end(), [&](double d) { return d < -1e-12 * dmax; });
  if (pos && neg) fail(ErrorKind::GeometryError, "curved patch map folds over (Jacobian changes sign)");
  for (std::size_t k = 0; k < det.size(); ++k) q.w[k] *= std::abs(det[k]);
  return q;
}

QuadRule cut_subelement_rule(const InterfaceCurve& curve, const ElementInfo& elem, Side side, int n,
                             double element_area) {
  const Subelement& sub = elem.subelement(side);
  QuadRule q;
  q.degree = 2 * n - 2;
  for (const Patch& p : sub.patches) q.append(patch_rule(curve, p, n));
  if (q.measure() < 1e-14 * element_area)
    fail(ErrorKind::DegenerateCut, fmt::format("subelement area {} is negligible", q.measure()));
  return q;
}

SidedQuad edge_rule(const Vec2& a, const Vec2& b, const EdgeCut& cut, int n) {
  std::vector<double> breaks{0.0};
  breaks.insert(breaks.end(), cut.t.begin(), cut.t.end());
  breaks.push_back(1.0);
  const double len = (b - a).norm();
  SidedQuad q;
  Side s = cut.side_at_start;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double t0 = breaks[k], t1 = breaks[k + 1];
    if (t1 - t0 > 1e-14) {
      const Rule1D g = gauss_interval(n, t0, t1);
      for (int i = 0; i < n; ++i) {
        q.x.push_back(a + g.x[i] * (b - a));
        q.w.push_back(g.w[i] * len);
        q.side.push_back(s);
      }
    }
    s = opposite(s);
  }
  return q;
}

InterfaceQuad interface_rule(double xi0, double xi1, int n) {
  if (!(xi1 > xi0)) fail(ErrorKind::EmptyInterval, "interface parameter interval is empty");
  const Rule1D g = gauss_interval(n, xi0, xi1);
  return {g.x, g.w};
}

}  // namespace gcife
