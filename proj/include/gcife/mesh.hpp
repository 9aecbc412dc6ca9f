#pragma once

#include "gcife/curve.hpp"

#include <array>
#include <filesystem>
#include <vector>

namespace gcife {

inline constexpr int kBoundary = -1;

struct Edge {
  std::array<int, 2> v{};
  int left = kBoundary;   // first incident element; the edge runs counterclockwise in it
  int right = kBoundary;  // second incident element or kBoundary
};

struct DomainBox {
  double x0 = -1.0, x1 = 1.0, y0 = -1.0, y1 = 1.0;
};

class TriMesh {
 public:
  /// Orients every triangle counterclockwise and builds the edge topology.
  /// Throws TopologyError for degenerate triangles or non-manifold edges.
  TriMesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<Edge>& edges() const { return edges_; }
  /// Local edge i of element k joins local vertices i and (i+1) % 3.
  const std::array<int, 3>& element_edges(int k) const { return element_edges_[k]; }

  int num_elements() const { return static_cast<int>(triangles_.size()); }
  std::array<Vec2, 3> corners(int k) const;
  double area(int k) const;
  double diameter(int k) const;
  double inradius(int k) const;
  Vec2 centroid(int k) const;
  double h_max() const { return h_max_; }
  /// max over elements of diameter / inradius.
  double shape_regularity() const;
  double edge_length(int e) const { return (vertices_[edges_[e].v[1]] - vertices_[edges_[e].v[0]]).norm(); }

 private:
  std::vector<Vec2> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> element_edges_;
  double h_max_ = 0.0;
};

/// n x n squares, each split into two triangles by the (i,j)-(i+1,j+1) diagonal.
TriMesh generate_structured(int n, const DomainBox& domain = {});

/// Planar node/ele text files with 1-based indices.
TriMesh load_mesh(const std::filesystem::path& node_file, const std::filesystem::path& ele_file);
void save_mesh(const TriMesh& mesh, const std::filesystem::path& node_file,
               const std::filesystem::path& ele_file);

enum class Side { Minus = 0, Plus = 1 };
inline Side opposite(Side s) { return s == Side::Minus ? Side::Plus : Side::Minus; }
inline int sign_of(Side s) { return s == Side::Minus ? -1 : 1; }

enum class ElementKind { NoninterfaceMinus, NoninterfacePlus, Interface };

/// One integration patch of a subelement, mapped from the unit square.
///   Triangle:   straight triangle corners[0..2] (collapsed square).
///   Cone:       apex corners[0] joined to the arc g(xi) for xi from xi_a to xi_b.
///   CurvedQuad: corners B, C, Q, P with straight sides B-C, C-Q, P-B and the
///               arc from P = g(xi_a) to Q = g(xi_b); transfinite blending.
struct Patch {
  enum class Kind { Triangle, Cone, CurvedQuad };
  Kind kind = Kind::Triangle;
  std::array<Vec2, 4> corners{};
  double xi_a = 0.0;
  double xi_b = 0.0;
};

struct Subelement {
  enum class Shape { CurvedTriangle, CurvedQuad, CurvedCap, CapComplement };
  Side side = Side::Minus;
  Shape shape = Shape::CurvedTriangle;
  std::vector<Patch> patches;
};

struct CutPoint {
  Vec2 x = Vec2::Zero();
  double xi = 0.0;  // unwrapped near the element's reference parameter
  int edge = -1;    // global edge id
};

struct ElementInfo {
  ElementKind kind = ElementKind::NoninterfacePlus;
  // Interface elements only.
  FrenetBox box;
  double xi_ref = 0.0;
  std::vector<CutPoint> cuts;
  std::array<Subelement, 2> sub;  // indexed by Side

  bool is_interface() const { return kind == ElementKind::Interface; }
  const Subelement& subelement(Side s) const { return sub[static_cast<int>(s)]; }
};

/// Crossings of the curve with one mesh edge.
struct EdgeCut {
  std::vector<double> t;  // parameters along v[0] -> v[1], ascending
  std::vector<double> xi;
  Side side_at_start = Side::Minus;  // side of the segment before the first crossing
};

struct Classification {
  std::vector<ElementInfo> elements;
  std::vector<EdgeCut> edge_cuts;
  int num_minus = 0;
  int num_plus = 0;
  int num_interface = 0;
};

Classification classify(const TriMesh& mesh, const InterfaceCurve& curve);

/// Bounding box of R(K) over the vertices and 8 interior samples per edge,
/// padded by 1% of each extent. xi values are unwrapped near xi_ref.
FrenetBox frenet_box(const InterfaceCurve& curve, const std::array<Vec2, 3>& K, double xi_ref);

/// Side of a point: eta from the tubular map near the curve, winding test elsewhere.
Side point_side(const InterfaceCurve& curve, const Vec2& x, double snap_tol);

}  // namespace gcife
