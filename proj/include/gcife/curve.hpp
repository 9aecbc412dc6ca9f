#pragma once

// Parametric interface curves and the Frenet apparatus: frames, the tubular
// map (eta, xi) -> g(xi) + eta n(xi) and its inverse, and the metric
// coefficients of the Laplacian written in (eta, xi) coordinates.

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gcife {

using Vec2 = Eigen::Vector2d;

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Q = [[0, 1], [-1, 0]], so n = Q tau.
inline Vec2 apply_q(const Vec2& v) { return {v.y(), -v.x()}; }

/// g and its first three parameter derivatives at one parameter value.
struct CurveJet {
  Vec2 g = Vec2::Zero();
  Vec2 d1 = Vec2::Zero();
  Vec2 d2 = Vec2::Zero();
  Vec2 d3 = Vec2::Zero();
};

class InterfaceCurve {
 public:
  /// Returns g, g', g'' and, when has_third_derivative, g'''.
  using Evaluator = std::function<CurveJet(double xi)>;

  InterfaceCurve(std::string name, double xi_start, double xi_end, bool closed,
                 bool arc_length, bool has_third_derivative, Evaluator eval);

  const std::string& name() const { return name_; }
  double xi_start() const { return xi_start_; }
  double xi_end() const { return xi_end_; }
  double period() const { return xi_end_ - xi_start_; }
  bool closed() const { return closed_; }
  bool arc_length() const { return arc_length_; }
  bool has_third_derivative() const { return has_third_; }

  CurveJet jet(double xi) const { return eval_(xi); }
  Vec2 point(double xi) const { return eval_(xi).g; }
  double speed(double xi) const { return eval_(xi).d1.norm(); }
  double curvature(double xi) const;
  /// d kappa / d xi; finite differences when the curve supplies no g'''.
  double curvature_derivative(double xi) const;

  /// Closed curves: maps xi into [xi_start, xi_end). Open curves: identity.
  double wrap(double xi) const;
  /// Closed curves: the representative of xi closest to ref. Open curves: identity.
  double unwrap_near(double xi, double ref) const;

  /// Uniform parameter samples, 512 segments; used for coarse distance and side tests.
  const std::vector<Vec2>& polyline() const { return polyline_; }
  /// +1 when a closed curve runs counterclockwise, -1 clockwise, 0 for open curves.
  int orientation() const { return orientation_; }
  double max_abs_curvature() const { return max_abs_curvature_; }

 private:
  std::string name_;
  double xi_start_;
  double xi_end_;
  bool closed_;
  bool arc_length_;
  bool has_third_;
  Evaluator eval_;
  std::vector<Vec2> polyline_;
  int orientation_ = 0;
  double max_abs_curvature_ = 0.0;
};

InterfaceCurve make_circle(double cx, double cy, double r);
InterfaceCurve make_ellipse(double cx, double cy, double a, double b);
/// Straight line x0 + s (dx, dy), s in [s0, s1]; unit speed when |(dx, dy)| = 1.
InterfaceCurve make_line(double x0, double y0, double dx, double dy, double s0 = -10.0,
                         double s1 = 10.0);
/// Polar flower r(theta) = a + b cos(k theta) around (cx, cy).
InterfaceCurve make_flower(double cx, double cy, double a, double b, int k);

/// Parses "circle cx cy r", "ellipse cx cy a b", "line x0 y0 dx dy [s0 s1]",
/// "flower cx cy a b k".
InterfaceCurve parse_curve(std::string_view spec);

struct FrenetFrame {
  double xi = 0.0;
  Vec2 tangent = Vec2::Zero();
  Vec2 normal = Vec2::Zero();
  double curvature = 0.0;
  double speed = 0.0;
};

/// (eta, xi): signed normal offset and curve parameter.
struct FrenetPoint {
  double eta = 0.0;
  double xi = 0.0;
};

/// Axis-aligned rectangle [eta_min, eta_max] x [xi0, xi1] in Frenet coordinates.
struct FrenetBox {
  double eta_min = 0.0;
  double eta_max = 0.0;
  double xi0 = 0.0;
  double xi1 = 0.0;

  double xi_mid() const { return 0.5 * (xi0 + xi1); }
  bool contains(FrenetPoint p, double tol = 0.0) const {
    return p.eta >= eta_min - tol && p.eta <= eta_max + tol && p.xi >= xi0 - tol &&
           p.xi <= xi1 + tol;
  }
};

struct MetricFactors {
  double rho = 0.0;
  double psi = 0.0;
  double j0 = 0.0;
  double j1 = 0.0;
  double j2 = 0.0;
  double curvature_derivative = 0.0;
};

inline constexpr double kDefaultTubeTol = 1e-8;

FrenetFrame frenet_frame(const InterfaceCurve& curve, double xi);

Vec2 forward_map(const InterfaceCurve& curve, FrenetPoint p);

/// Closest-point inverse of forward_map. With a hint the returned xi is the
/// representative nearest the hint; otherwise it is wrapped into the
/// parameter interval.
FrenetPoint inverse_map(const InterfaceCurve& curve, const Vec2& x,
                        std::optional<double> hint = std::nullopt);

MetricFactors metric_factors(const InterfaceCurve& curve, FrenetPoint p,
                             double tube_tol = kDefaultTubeTol);

/// k-th eta-derivatives (k = 0..max_order) of J0, J1, J2 on the curve (eta = 0).
struct MetricEtaDerivatives {
  std::vector<double> j0;
  std::vector<double> j1;
  std::vector<double> j2;
};

MetricEtaDerivatives metric_eta_derivatives(const InterfaceCurve& curve, double xi,
                                            int max_order);

/// Partial derivatives of a function of (eta, xi) at one point.
struct FrenetDerivatives {
  double u_eta = 0.0;
  double u_xi = 0.0;
  double u_eta_eta = 0.0;
  double u_xi_xi = 0.0;
};

/// u_eta_eta + J0 u_xi_xi + J1 u_eta + J2 u_xi.
double frenet_laplacian(const InterfaceCurve& curve, const FrenetDerivatives& d, FrenetPoint p);

/// Physical gradient u_eta n + rho u_xi tau of u = u_hat o R.
Vec2 physical_gradient(const InterfaceCurve& curve, double u_eta, double u_xi, FrenetPoint p);

/// Distance from x to the sampled polyline of the curve.
double polyline_distance(const InterfaceCurve& curve, const Vec2& x);

/// Sign of eta at x (+1 or -1) decided without the tubular map: winding number
/// for closed curves, nearest polyline segment for open ones.
int coarse_side(const InterfaceCurve& curve, const Vec2& x);

}  // namespace gcife
