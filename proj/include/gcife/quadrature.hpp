#pragma once

#include "gcife/curve.hpp"
#include "gcife/mesh.hpp"

#include <array>
#include <vector>

namespace gcife {

struct Rule1D {
  std::vector<double> x;
  std::vector<double> w;
};

/// n-point Gauss-Legendre rule on [a, b]; exact to degree 2n - 1.
Rule1D gauss_interval(int n, double a = -1.0, double b = 1.0);

struct QuadRule {
  std::vector<Vec2> x;
  std::vector<double> w;
  int degree = 0;

  int size() const { return static_cast<int>(w.size()); }
  double measure() const;
  void append(const QuadRule& other);
};

/// Collapsed tensor Gauss rule with ceil((degree + 2) / 2) points per direction.
QuadRule triangle_rule(int degree, const std::array<Vec2, 3>& K);
QuadRule triangle_rule(int degree);  // reference triangle (0,0), (1,0), (0,1)

/// n x n Gauss points through the patch map; weights are |Jacobian| times tensor weights.
QuadRule patch_rule(const InterfaceCurve& curve, const Patch& patch, int n);

/// Rule over one side of an interface element. Throws DegenerateCut when the
/// subelement area is below 1e-14 |K|.
QuadRule cut_subelement_rule(const InterfaceCurve& curve, const ElementInfo& elem, Side side,
                             int n, double element_area);

struct SidedQuad {
  std::vector<Vec2> x;
  std::vector<double> w;
  std::vector<Side> side;
  int size() const { return static_cast<int>(w.size()); }
};

/// Gauss rule on segment a-b split at the parameters in cut; sides alternate
/// starting from cut.side_at_start.
SidedQuad edge_rule(const Vec2& a, const Vec2& b, const EdgeCut& cut, int n);

/// Gauss nodes in xi on [xi0, xi1] with plain d(xi) weights.
struct InterfaceQuad {
  std::vector<double> xi;
  std::vector<double> w;
  int size() const { return static_cast<int>(w.size()); }
};
InterfaceQuad interface_rule(double xi0, double xi1, int n);

}  // namespace gcife
