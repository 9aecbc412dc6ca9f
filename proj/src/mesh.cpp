#include "gcife/mesh.hpp"

#include "gcife/errors.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>
#include <fmt/os.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace gcife {

TriMesh::TriMesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  const int nv = static_cast<int>(vertices_.size());
  for (std::size_t k = 0; k < triangles_.size(); ++k) {
    auto& t = triangles_[k];
    for (int v : t)
      if (v < 0 || v >= nv) fail(ErrorKind::TopologyError, fmt::format("element {} has vertex {} out of range", k, v));
    const Vec2 &a = vertices_[t[0]], &b = vertices_[t[1]], &c = vertices_[t[2]];
    const double d2 = cross(b - a, c - a);
    const double scale = std::max({(b - a).squaredNorm(), (c - a).squaredNorm(), (c - b).squaredNorm()});
    if (std::abs(d2) <= 1e-14 * scale) fail(ErrorKind::TopologyError, fmt::format("element {} is degenerate", k));
    if (d2 < 0) std::swap(t[1], t[2]);
  }

  std::map<std::pair<int, int>, int> index;
  element_edges_.resize(triangles_.size());
  for (int k = 0; k < num_elements(); ++k) {
    const auto& t = triangles_[k];
    for (int i = 0; i < 3; ++i) {
      const int a = t[i], b = t[(i + 1) % 3];
      const auto key = std::minmax(a, b);
      auto [it, inserted] = index.try_emplace({key.first, key.second}, static_cast<int>(edges_.size()));
      if (inserted) {
        edges_.push_back(Edge{{a, b}, k, kBoundary});
      } else {
        Edge& e = edges_[it->second];
        if (e.right != kBoundary)
          fail(ErrorKind::TopologyError, fmt::format("edge ({}, {}) is shared by more than two elements", a, b));
        if (e.v[0] == a)
          fail(ErrorKind::TopologyError, fmt::format("elements {} and {} overlap along ({}, {})", e.left, k, a, b));
        e.right = k;
      }
      element_edges_[k][i] = it->second;
    }
  }
  for (int k = 0; k < num_elements(); ++k) h_max_ = std::max(h_max_, diameter(k));
}

std::array<Vec2, 3> TriMesh::corners(int k) const {
  const auto& t = triangles_[k];
  return {vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]};
}

double TriMesh::area(int k) const {
  const auto c = corners(k);
  return 0.5 * cross(c[1] - c[0], c[2] - c[0]);
}

double TriMesh::diameter(int k) const {
  const auto c = corners(k);
  return std::max({(c[1] - c[0]).norm(), (c[2] - c[1]).norm(), (c[0] - c[2]).norm()});
}

double TriMesh::inradius(int k) const {
  const auto c = corners(k);
  const double perimeter = (c[1] - c[0]).norm() + (c[2] - c[1]).norm() + (c[0] - c[2]).norm();
  return 2.0 * area(k) / perimeter;
}

Vec2 TriMesh::centroid(int k) const {
  const auto c = corners(k);
  return (c[0] + c[1] + c[2]) / 3.0;
}

double TriMesh::shape_regularity() const {
  double r = 0.0;
  for (int k = 0; k < num_elements(); ++k) r = std::max(r, diameter(k) / inradius(k));
  return r;
}

TriMesh generate_structured(int n, const DomainBox& d) {
  if (n < 1) fail(ErrorKind::ConfigError, "structured mesh needs n >= 1");
  std::vector<Vec2> v;
  v.reserve((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      v.emplace_back(d.x0 + (d.x1 - d.x0) * i / n, d.y0 + (d.y1 - d.y0) * j / n);
  std::vector<std::array<int, 3>> t;
  t.reserve(2 * n * n);
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      t.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      t.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return TriMesh(std::move(v), std::move(t));
}

namespace {

// Next non-empty, non-comment line split into tokens.
bool next_record(std::istream& in, std::istringstream& rec) {
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rec.clear();
    rec.str(line);
    return true;
  }
  return false;
}

std::ifstream open_input(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) fail(ErrorKind::ParseError, fmt::format("cannot open {}", p.string()));
  return in;
}

}  // namespace

TriMesh load_mesh(const std::filesystem::path& node_file, const std::filesystem::path& ele_file) {
  std::ifstream nin = open_input(node_file);
  std::istringstream rec;
  int nv = 0, dim = 0;
  if (!next_record(nin, rec) || !(rec >> nv >> dim) || dim != 2 || nv < 3)
    fail(ErrorKind::ParseError, fmt::format("{}: bad header", node_file.string()));
  std::vector<Vec2> vertices(nv);
  std::vector<bool> seen(nv, false);
  for (int i = 0; i < nv; ++i) {
    int id = 0;
    double x = 0, y = 0;
    if (!next_record(nin, rec) || !(rec >> id >> x >> y))
      fail(ErrorKind::ParseError, fmt::format("{}: bad vertex record {}", node_file.string(), i + 1));
    if (id < 1 || id > nv || seen[id - 1])
      fail(ErrorKind::ParseError, fmt::format("{}: bad vertex id {}", node_file.string(), id));
    seen[id - 1] = true;
    vertices[id - 1] = Vec2(x, y);
  }

  std::ifstream ein = open_input(ele_file);
  int nt = 0, npe = 0;
  if (!next_record(ein, rec) || !(rec >> nt >> npe) || npe != 3 || nt < 1)
    fail(ErrorKind::ParseError, fmt::format("{}: bad header", ele_file.string()));
  std::vector<std::array<int, 3>> tris(nt);
  for (int k = 0; k < nt; ++k) {
    int id = 0, a = 0, b = 0, c = 0;
    if (!next_record(ein, rec) || !(rec >> id >> a >> b >> c))
      fail(ErrorKind::ParseError, fmt::format("{}: bad element record {}", ele_file.string(), k + 1));
    if (id < 1 || id > nt) fail(ErrorKind::ParseError, fmt::format("{}: bad element id {}", ele_file.string(), id));
    tris[id - 1] = {a - 1, b - 1, c - 1};
  }
  return TriMesh(std::move(vertices), std::move(tris));
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& node_file,
               const std::filesystem::path& ele_file) {
  auto nout = fmt::output_file(node_file.string());
  nout.print("{} 2 0 0\n", mesh.vertices().size());
  for (std::size_t i = 0; i < mesh.vertices().size(); ++i)
    nout.print("{} {:.17g} {:.17g}\n", i + 1, mesh.vertices()[i].x(), mesh.vertices()[i].y());
  auto eout = fmt::output_file(ele_file.string());
  eout.print("{} 3 0\n", mesh.triangles().size());
  for (std::size_t k = 0; k < mesh.triangles().size(); ++k) {
    const auto& t = mesh.triangles()[k];
    eout.print("{} {} {} {}\n", k + 1, t[0] + 1, t[1] + 1, t[2] + 1);
  }
}

Side point_side(const InterfaceCurve& curve, const Vec2& x, double snap_tol) {
  try {
    const FrenetPoint p = inverse_map(curve, x);
    return p.eta > snap_tol ? Side::Plus : Side::Minus;
  } catch (const Error&) {
    return coarse_side(curve, x) > 0 ? Side::Plus : Side::Minus;
  }
}

FrenetBox frenet_box(const InterfaceCurve& curve, const std::array<Vec2, 3>& K, double xi_ref) {
  constexpr int kSamples = 8;
  FrenetBox box{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  auto add = [&](const Vec2& x) {
    FrenetPoint p;
    try {
      p = inverse_map(curve, x, xi_ref);
    } catch (const Error& e) {
      fail(ErrorKind::TubeError, fmt::format("element not inside the tubular neighborhood ({})", e.what()));
    }
    box.eta_min = std::min(box.eta_min, p.eta);
    box.eta_max = std::max(box.eta_max, p.eta);
    box.xi0 = std::min(box.xi0, p.xi);
    box.xi1 = std::max(box.xi1, p.xi);
  };
  for (int i = 0; i < 3; ++i) {
    const Vec2& a = K[i];
    const Vec2& b = K[(i + 1) % 3];
    add(a);
    for (int s = 1; s <= kSamples; ++s) add(a + (b - a) * (double(s) / (kSamples + 1)));
  }
  const double pe = 0.01 * (box.eta_max - box.eta_min);
  const double px = 0.01 * (box.xi1 - box.xi0);
  box.eta_min -= pe;
  box.eta_max += pe;
  box.xi0 -= px;
  box.xi1 += px;
  return box;
}

namespace {

constexpr int kEdgeSamples = 16;

struct Crossing {
  double t;
  double xi;
};

struct EdgeProbe {
  const InterfaceCurve& curve;
  Vec2 a, b;
  double snap;

  Vec2 at(double t) const { return a + t * (b - a); }

  FrenetPoint frenet(double t, std::optional<double> hint) const {
    try {
      return inverse_map(curve, at(t), hint);
    } catch (const Error& e) {
      fail(ErrorKind::TubeError, fmt::format("edge near the interface leaves the tubular neighborhood ({})", e.what()));
    }
  }
};

Side side_of(double eta, double snap) { return eta > snap ? Side::Plus : Side::Minus; }

std::vector<Crossing> edge_crossings(const EdgeProbe& probe, Side& start_side) {
  const int n = kEdgeSamples;
  std::vector<double> t(n + 1), eta(n + 1), xi(n + 1);
  std::optional<double> hint;
  for (int i = 0; i <= n; ++i) {
    t[i] = double(i) / n;
    const FrenetPoint p = probe.frenet(t[i], hint);
    eta[i] = p.eta;
    xi[i] = p.xi;
    hint = p.xi;
  }
  start_side = side_of(eta[0], probe.snap);

  std::vector<Crossing> out;
  auto eta_at = [&](double tt, double h) { return probe.frenet(tt, h).eta; };
  auto root = [&](double lo, double hi, double h) {
    double flo = eta_at(lo, h), fhi = eta_at(hi, h);
    if (std::abs(flo) <= probe.snap) return lo;
    if (std::abs(fhi) <= probe.snap) return hi;
    if (flo * fhi > 0) fail(ErrorKind::TubeError, "lost the bracket of an edge crossing");
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve([&](double x) { return eta_at(x, h); }, lo, hi, flo, fhi,
                                               boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (r.first + r.second);
  };
  auto push = [&](double tt, double h) { out.push_back({tt, probe.frenet(tt, h).xi}); };

  const double spacing = (probe.b - probe.a).norm() / n;
  for (int i = 0; i < n; ++i) {
    const Side s0 = side_of(eta[i], probe.snap), s1 = side_of(eta[i + 1], probe.snap);
    if (s0 != s1) push(root(t[i], t[i + 1], xi[i]), xi[i]);
  }
  // A pair of crossings between two samples shows up as a dip of |eta| toward zero.
  for (int i = 0; i <= n; ++i) {
    const int lo = std::max(i - 1, 0), hi = std::min(i + 1, n);
    const Side s = side_of(eta[i], probe.snap);
    if (side_of(eta[lo], probe.snap) != s || side_of(eta[hi], probe.snap) != s) continue;
    if (std::max({std::abs(eta[lo]), std::abs(eta[i]), std::abs(eta[hi])}) <= probe.snap) continue;
    const double sg = s == Side::Plus ? 1.0 : -1.0;
    const double v = sg * eta[i];
    if (v > spacing || v > sg * eta[lo] || v > sg * eta[hi]) continue;
    const double h = xi[i];
    auto [tmin, vmin] = boost::math::tools::brent_find_minima(
        [&](double x) { return sg * eta_at(x, h); }, t[lo], t[hi], 40);
    const bool at_end = tmin - t[lo] < 1e-9 || t[hi] - tmin < 1e-9;
    if (vmin < -probe.snap) {
      push(root(t[lo], tmin, h), h);
      push(root(tmin, t[hi], h), h);
    } else if (std::abs(vmin) <= probe.snap && !at_end && !(tmin <= 1e-9 || tmin >= 1 - 1e-9)) {
      fail(ErrorKind::TubeError, fmt::format("interface is tangent to an edge at t = {}", tmin));
    }
  }
  std::sort(out.begin(), out.end(), [](const Crossing& x, const Crossing& y) { return x.t < y.t; });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Crossing& x, const Crossing& y) { return std::abs(x.t - y.t) < 1e-12; }),
            out.end());
  const bool flips = side_of(eta[n], probe.snap) != start_side;
  if ((out.size() % 2 == 1) != flips)
    fail(ErrorKind::TubeError, "interface touches an edge tangentially; refine the mesh");
  return out;
}

struct LocalCut {
  CutPoint point;
  std::array<bool, 3> on_edge{};  // local edges containing the point
};

Patch cone(const Vec2& apex, double xi_a, double xi_b) {
  Patch p;
  p.kind = Patch::Kind::Cone;
  p.corners[0] = apex;
  p.xi_a = xi_a;
  p.xi_b = xi_b;
  return p;
}

Patch triangle(const Vec2& a, const Vec2& b, const Vec2& c) {
  Patch p;
  p.kind = Patch::Kind::Triangle;
  p.corners = {a, b, c, Vec2::Zero()};
  return p;
}

bool nondegenerate(const Vec2& a, const Vec2& b, const Vec2& c, double h) {
  return std::abs(cross(b - a, c - a)) > 1e-14 * h * h;
}

// Side of the region bounded by the arc and apex, from a point inside it.
Side region_side(const InterfaceCurve& curve, const Vec2& apex, double xi_a, double xi_b,
                 double xi_ref, double snap) {
  const Vec2 inner = 0.5 * (apex + curve.point(0.5 * (xi_a + xi_b)));
  const FrenetPoint p = inverse_map(curve, inner, xi_ref);
  return side_of(p.eta, snap);
}

void build_subelements(const InterfaceCurve& curve, const std::array<Vec2, 3>& v,
                       const std::array<LocalCut, 2>& cuts, double h, double snap, ElementInfo& info) {
  const LocalCut& c0 = cuts[0];
  const LocalCut& c1 = cuts[1];
  for (int e = 0; e < 3; ++e) {
    if (!(c0.on_edge[e] && c1.on_edge[e])) continue;
    // Both crossings on local edge e = (A, B); the cap hangs into the element.
    const Vec2& A = v[e];
    const Vec2& B = v[(e + 1) % 3];
    const Vec2& C = v[(e + 2) % 3];
    const bool first_near_a = (c0.point.x - A).squaredNorm() <= (c1.point.x - A).squaredNorm();
    const CutPoint& P = first_near_a ? c0.point : c1.point;
    const CutPoint& Q = first_near_a ? c1.point : c0.point;
    const Vec2 M = 0.5 * (P.x + Q.x);
    Subelement cap{Side::Minus, Subelement::Shape::CurvedCap, {cone(M, P.xi, Q.xi)}};
    cap.side = region_side(curve, M, P.xi, Q.xi, info.xi_ref, snap);
    Subelement rest{opposite(cap.side), Subelement::Shape::CapComplement, {}};
    if (nondegenerate(C, A, P.x, h)) rest.patches.push_back(triangle(C, A, P.x));
    rest.patches.push_back(cone(C, P.xi, Q.xi));
    if (nondegenerate(C, Q.x, B, h)) rest.patches.push_back(triangle(C, Q.x, B));
    info.sub[static_cast<int>(cap.side)] = std::move(cap);
    info.sub[static_cast<int>(rest.side)] = std::move(rest);
    return;
  }
  for (int i = 0; i < 3; ++i) {
    // Lone vertex A = v[i] between local edges (A, B) = i and (C, A) = i + 2.
    const int e_ab = i, e_ca = (i + 2) % 3;
    const LocalCut* p = nullptr;
    const LocalCut* q = nullptr;
    if (c0.on_edge[e_ab] && c1.on_edge[e_ca]) {
      p = &c0;
      q = &c1;
    } else if (c1.on_edge[e_ab] && c0.on_edge[e_ca]) {
      p = &c1;
      q = &c0;
    } else {
      continue;
    }
    const Vec2& A = v[i];
    const Vec2& B = v[(i + 1) % 3];
    const Vec2& C = v[(i + 2) % 3];
    const CutPoint& P = p->point;
    const CutPoint& Q = q->point;
    Subelement tri{Side::Minus, Subelement::Shape::CurvedTriangle, {cone(A, P.xi, Q.xi)}};
    tri.side = region_side(curve, A, P.xi, Q.xi, info.xi_ref, snap);
    Patch quad;
    quad.kind = Patch::Kind::CurvedQuad;
    quad.corners = {B, C, Q.x, P.x};
    quad.xi_a = P.xi;
    quad.xi_b = Q.xi;
    Subelement rest{opposite(tri.side), Subelement::Shape::CurvedQuad, {quad}};
    info.sub[static_cast<int>(tri.side)] = std::move(tri);
    info.sub[static_cast<int>(rest.side)] = std::move(rest);
    return;
  }
  fail(ErrorKind::GeometryError, "could not place the interface crossings on the element boundary");
}

}  // namespace

Classification classify(const TriMesh& mesh, const InterfaceCurve& curve) {
  Classification out;
  const auto& edges = mesh.edges();
  const auto& verts = mesh.vertices();
  const double snap = 1e-10 * mesh.h_max();

  // Polyline chord error bound, doubled for safety.
  double seg = 0.0;
  for (std::size_t i = 1; i < curve.polyline().size(); ++i)
    seg = std::max(seg, (curve.polyline()[i] - curve.polyline()[i - 1]).norm());
  const double slack = 2.0 * (curve.max_abs_curvature() * seg * seg / 8.0) + 1e-12;

  out.edge_cuts.resize(edges.size());
  std::vector<bool> near(edges.size(), false);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Vec2& a = verts[edges[e].v[0]];
    const Vec2& b = verts[edges[e].v[1]];
    const double d = polyline_distance(curve, 0.5 * (a + b)) - 0.5 * (b - a).norm();
    EdgeCut& cut = out.edge_cuts[e];
    if (d > slack) {
      cut.side_at_start = coarse_side(curve, a) > 0 ? Side::Plus : Side::Minus;
      continue;
    }
    near[e] = true;
    const auto cs = edge_crossings(EdgeProbe{curve, a, b, snap}, cut.side_at_start);
    for (const auto& c : cs) {
      cut.t.push_back(c.t);
      cut.xi.push_back(c.xi);
    }
  }

  out.elements.resize(mesh.num_elements());
  for (int k = 0; k < mesh.num_elements(); ++k) {
    ElementInfo& info = out.elements[k];
    const auto v = mesh.corners(k);
    const double h = mesh.diameter(k);
    std::vector<LocalCut> cuts;
    for (int le = 0; le < 3; ++le) {
      const int e = mesh.element_edges(k)[le];
      const Edge& edge = edges[e];
      const EdgeCut& ec = out.edge_cuts[e];
      for (std::size_t c = 0; c < ec.t.size(); ++c) {
        const Vec2 x = verts[edge.v[0]] + ec.t[c] * (verts[edge.v[1]] - verts[edge.v[0]]);
        auto same = std::find_if(cuts.begin(), cuts.end(), [&](const LocalCut& lc) {
          return (lc.point.x - x).norm() <= 1e-12 * h;
        });
        if (same != cuts.end()) {
          same->on_edge[le] = true;
          continue;
        }
        LocalCut lc;
        lc.point = CutPoint{x, ec.xi[c], e};
        lc.on_edge[le] = true;
        // A crossing at a vertex lies on both edges through it.
        const double tl = ec.t[c];
        const int vid = tl < 1e-12 ? edge.v[0] : (tl > 1 - 1e-12 ? edge.v[1] : -1);
        if (vid >= 0) {
          const auto& tri = mesh.triangles()[k];
          for (int j = 0; j < 3; ++j)
            if (tri[j] == vid) lc.on_edge[(j + 2) % 3] = lc.on_edge[j] = true;
        }
        cuts.push_back(lc);
      }
    }

    // The curve running along an edge does not enter the open element.
    int along = -1;
    if (cuts.size() == 2) {
      for (int le = 0; le < 3; ++le) {
        if (!(cuts[0].on_edge[le] && cuts[1].on_edge[le])) continue;
        const Vec2 a = v[le], d = (v[(le + 1) % 3] - a).normalized();
        const double xi0 = cuts[0].point.xi;
        const double xi1 = curve.unwrap_near(cuts[1].point.xi, xi0);
        double dev = 0.0;
        for (int s = 1; s < 8; ++s)
          dev = std::max(dev, std::abs(cross(d, curve.point(xi0 + (xi1 - xi0) * s / 8.0) - a)));
        if (dev <= 1e-10 * h) along = le;
      }
    }
    if (cuts.size() < 2 || along >= 0) {
      Side s = Side::Minus;
      if (along >= 0) {
        const Side opp = point_side(curve, v[(along + 2) % 3], snap);
        info.kind = opp == Side::Minus ? ElementKind::NoninterfaceMinus : ElementKind::NoninterfacePlus;
        (opp == Side::Minus ? out.num_minus : out.num_plus)++;
        continue;
      }
      bool decided = false;
      for (int le = 0; le < 3 && !decided; ++le) {
        const int e = mesh.element_edges(k)[le];
        if (!out.edge_cuts[e].t.empty()) continue;
        s = out.edge_cuts[e].side_at_start;
        decided = true;
      }
      if (!decided) s = point_side(curve, mesh.centroid(k), snap);
      info.kind = s == Side::Minus ? ElementKind::NoninterfaceMinus : ElementKind::NoninterfacePlus;
      (s == Side::Minus ? out.num_minus : out.num_plus)++;
      continue;
    }
    if (cuts.size() > 2)
      fail(ErrorKind::TubeError,
           fmt::format("element {} is crossed {} times by the interface; refine the mesh", k, cuts.size()));

    info.kind = ElementKind::Interface;
    ++out.num_interface;
    info.xi_ref = cuts[0].point.xi;
    for (auto& c : cuts) c.point.xi = curve.unwrap_near(c.point.xi, info.xi_ref);
    info.cuts = {cuts[0].point, cuts[1].point};
    info.box = frenet_box(curve, v, info.xi_ref);
    build_subelements(curve, v, {cuts[0], cuts[1]}, h, snap, info);
  }
  return out;
}

}  // namespace gcife
