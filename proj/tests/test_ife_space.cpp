#include "doctest.h"

#include "gcife/errors.hpp"
#include "gcife/ife_space.hpp"
#include "gcife/quadrature.hpp"
#include "support.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>

using namespace gcife;
using gcife::testing::uniform;

namespace {

struct Setup {
  InterfaceCurve curve;
  TriMesh mesh;
  Classification cls;
  std::vector<int> cut;

  Setup(InterfaceCurve c, int n)
      : curve(std::move(c)), mesh(generate_structured(n, {-1.003, 0.997, -0.998, 1.002})), cls(classify(mesh, curve)) {
    for (int k = 0; k < mesh.num_elements(); ++k)
      if (cls.elements[k].is_interface()) cut.push_back(k);
  }

  const ElementInfo& info(int k) const { return cls.elements[k]; }
};

// fine enough that no element meets the interface more than twice
int mesh_n(const InterfaceCurve& c) { return c.max_abs_curvature() > 5.0 ? 40 : (c.max_abs_curvature() > 2.0 ? 24 : 16); }

std::vector<double> xi_samples(const FrenetBox& b, int n) {
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back(b.xi0 + (b.xi1 - b.xi0) * (i + 0.5) / n);
  return xs;
}

/// Values of every basis function on one side at (eta, xi), with eta-derivative de.
Eigen::RowVectorXd side_values(const IfeBasis& b, Side s, double eta, double xi, int de = 0, int dx = 0) {
  return b.frenet.eval(eta, xi, de, dx).transpose() * b.c(s);
}

double frenet_lap(const InterfaceCurve& curve, const IfeBasis& b, Side s, int j, FrenetPoint p) {
  const FrenetDerivatives d{side_values(b, s, p.eta, p.xi, 1, 0)[j], side_values(b, s, p.eta, p.xi, 0, 1)[j],
                            side_values(b, s, p.eta, p.xi, 2, 0)[j], side_values(b, s, p.eta, p.xi, 0, 2)[j]};
  return frenet_laplacian(curve, d, p);
}

/// Values at random points of the element, split by side, stacked minus then plus.
Eigen::MatrixXd sample_matrix(const InterfaceCurve& curve, const IfeBasis& b, const std::vector<Vec2>& x) {
  return eval_ife(curve, b, x).value;
}

std::vector<Vec2> element_points(const TriMesh& mesh, int k, int n) {
  const auto K = mesh.corners(k);
  std::vector<Vec2> x;
  for (int i = 0; i < n; ++i) {
    double a = uniform(0.0, 1.0), c = uniform(0.0, 1.0);
    if (a + c > 1) a = 1 - a, c = 1 - c;
    x.push_back(K[0] + a * (K[1] - K[0]) + c * (K[2] - K[0]));
  }
  return x;
}

/// Relative least-squares residual of fitting the columns of b by those of a.
double span_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd q = a.colPivHouseholderQr().solve(b);
  return (a * q - b).norm() / b.norm();
}

}  // namespace

TEST_CASE("general construction satisfies the weak jump conditions") {
  for (const InterfaceCurve& c : testing::builtin_curves()) {
    const Setup s(c, mesh_n(c));
    REQUIRE(!s.cut.empty());
    for (int m = 1; m <= 5; ++m)
      for (double bp : {10.0, 100.0, 1000.0})
        for (int k : s.cut) {
          const IfeBasis b = general_construction(s.curve, s.info(k), m, {1.0, bp}, {}, {k});
          CHECK(b.size() == dim_p(m));
          CHECK(jump_residuals(s.curve, b).max() < 1e-9);
        }
  }
}

TEST_CASE("initial construction satisfies the weak jump conditions") {
  for (const InterfaceCurve& c : testing::builtin_curves()) {
    const Setup s(c, mesh_n(c));
    for (int m = 1; m <= 5; ++m)
      for (double bp : {10.0, 1000.0})
        for (int k : s.cut) {
          const IfeBasis b = initial_construction(s.curve, s.info(k), m, {1.0, bp}, {k});
          CHECK(jump_residuals(s.curve, b).max() < 1e-9);
        }
  }
}

TEST_CASE("continuity and flux jumps vanish pointwise on the interface") {
  // both jumps are polynomials in xi of the tested degree, so weak means exact
  for (const InterfaceCurve& c : testing::builtin_curves()) {
    const Setup s(c, mesh_n(c));
    for (int m = 1; m <= 4; ++m)
      for (Construction kind : {Construction::Initial, Construction::General})
        for (int k : s.cut) {
          const Coefficients beta{1.0, 100.0};
          const IfeBasis b = kind == Construction::Initial
                                 ? initial_construction(s.curve, s.info(k), m, beta, {k})
                                 : general_construction(s.curve, s.info(k), m, beta, {}, {k});
          for (double xi : xi_samples(b.box, 7)) {
            const Eigen::RowVectorXd vm = side_values(b, Side::Minus, 0.0, xi);
            const Eigen::RowVectorXd vp = side_values(b, Side::Plus, 0.0, xi);
            const Eigen::RowVectorXd fm = beta.minus * side_values(b, Side::Minus, 0.0, xi, 1);
            const Eigen::RowVectorXd fp = beta.plus * side_values(b, Side::Plus, 0.0, xi, 1);
            for (int j = 0; j < b.size(); ++j) {
              const double sv = b.c(Side::Minus).col(j).cwiseAbs().sum() + b.c(Side::Plus).col(j).cwiseAbs().sum();
              CHECK(std::abs(vp[j] - vm[j]) < 1e-9 * sv);
              CHECK(std::abs(fp[j] - fm[j]) < 1e-9 * sv * (beta.plus / std::max(b.box.eta_max, -b.box.eta_min)));
            }
          }
        }
  }
}

TEST_CASE("extended jumps on a circle") {
  // J0 depends on eta only, so the Laplacian jump is a polynomial of degree m - 2 in xi
  const Setup s(make_circle(0.0, 0.0, testing::kR0), 10);
  const Coefficients beta{1.0, 10.0};
  for (int m = 2; m <= 4; ++m)
    for (int k : s.cut) {
      const IfeBasis b = general_construction(s.curve, s.info(k), m, beta, {}, {k});
      const double eta_scale = std::max(b.box.eta_max, -b.box.eta_min);
      const Rule1D g = gauss_interval(m + 2, b.box.xi0, b.box.xi1);
      const Basis1D p(m, b.box.xi0, b.box.xi1);
      for (int j = 0; j < b.size(); ++j) {
        auto jump = [&](double eta, double xi) {
          return beta.plus * frenet_lap(s.curve, b, Side::Plus, j, {eta, xi}) -
                 beta.minus * frenet_lap(s.curve, b, Side::Minus, j, {eta, xi});
        };
        auto scale = [&](double xi) {
          return beta.plus * std::abs(frenet_lap(s.curve, b, Side::Plus, j, {0.0, xi})) +
                 beta.minus * std::abs(frenet_lap(s.curve, b, Side::Minus, j, {0.0, xi}));
        };
        for (double xi : xi_samples(b.box, 5)) CHECK(std::abs(jump(0.0, xi)) <= 1e-9 * (scale(xi) + 1.0));
        if (m < 3) continue;
        // first eta-derivative, tested weakly against p_0..p_{m-3}
        const double h = 1e-4 * eta_scale;
        Eigen::VectorXd r = Eigen::VectorXd::Zero(m - 2);
        double mag = 0.0;
        for (std::size_t q = 0; q < g.x.size(); ++q) {
          const double d = (jump(h, g.x[q]) - jump(-h, g.x[q])) / (2 * h);
          r += g.w[q] * d * p.eval(g.x[q]).head(m - 2);
          mag += g.w[q] * scale(g.x[q]) / eta_scale;
        }
        CHECK(r.cwiseAbs().maxCoeff() <= 1e-6 * (mag + 1.0));
      }
    }
}

TEST_CASE("Laplacian jump is weakly zero on curved interfaces") {
  // same Gauss rule as the constraints, but the Laplacian evaluated directly off the curve
  for (const InterfaceCurve& c : testing::builtin_curves()) {
    const Setup s(c, mesh_n(c));
    const Coefficients beta{1.0, 100.0};
    for (int m = 2; m <= 5; ++m)
      for (int k : s.cut) {
        const IfeBasis b = general_construction(s.curve, s.info(k), m, beta, {}, {k});
        const Rule1D g = gauss_interval(m + 2, b.box.xi0, b.box.xi1);
        const Basis1D p(m, b.box.xi0, b.box.xi1);
        for (int j = 0; j < b.size(); ++j) {
          Eigen::VectorXd r = Eigen::VectorXd::Zero(m - 1), mag = Eigen::VectorXd::Zero(m - 1);
          for (std::size_t q = 0; q < g.x.size(); ++q) {
            const FrenetPoint pt{0.0, g.x[q]};
            const double lp = beta.plus * frenet_lap(s.curve, b, Side::Plus, j, pt);
            const double lm = beta.minus * frenet_lap(s.curve, b, Side::Minus, j, pt);
            const Eigen::VectorXd pk = p.eval(g.x[q]).head(m - 1);
            r += g.w[q] * (lp - lm) * pk;
            mag += g.w[q] * (std::abs(lp) + std::abs(lm)) * pk.cwiseAbs();
          }
          for (int i = 0; i < m - 1; ++i) CHECK(std::abs(r[i]) <= 1e-9 * mag.maxCoeff());
        }
      }
  }
}

TEST_CASE("equal coefficients give identical sides") {
  const Setup s(make_ellipse(0.1, -0.05, 0.6, 0.4), 24);
  for (int m = 1; m <= 5; ++m)
    for (int k : s.cut) {
      const IfeBasis gi = initial_construction(s.curve, s.info(k), m, {3.0, 3.0}, {k});
      CHECK((gi.c(Side::Plus) - gi.c(Side::Minus)).norm() == 0.0);
      const IfeBasis gg = general_construction(s.curve, s.info(k), m, {3.0, 3.0}, {}, {k});
      CHECK((gg.c(Side::Plus) - gg.c(Side::Minus)).norm() < 1e-9 * gg.c(Side::Minus).norm());
    }
}

TEST_CASE("general construction seeded with the initial minus side reproduces it") {
  const Setup s(make_flower(0.0, 0.0, 0.5, 0.1, 5), 40);
  for (int m = 1; m <= 5; ++m)
    for (int k : s.cut) {
      const Coefficients beta{1.0, 10.0};
      const IfeBasis init = initial_construction(s.curve, s.info(k), m, beta, {k});
      BuildOptions opt{k};
      opt.frenet = &init.frenet;
      opt.seed_side = Side::Minus;
      const IfeBasis gen = general_construction(s.curve, s.info(k), m, beta, init.c(Side::Minus), opt);
      CHECK((gen.c(Side::Plus) - init.c(Side::Plus)).norm() < 1e-8 * init.c(Side::Plus).norm());
    }
}

TEST_CASE("initial, general and both seed sides span the same space") {
  for (const InterfaceCurve& c : testing::builtin_curves()) {
    const Setup s(c, mesh_n(c));
    for (int m = 1; m <= 4; ++m)
      for (int k : s.cut) {
        const Coefficients beta{1.0, 100.0};
        const std::vector<Vec2> x = element_points(s.mesh, k, 3 * dim_p(m));
        BuildOptions minus{k}, plus{k};
        minus.seed_side = Side::Minus;
        plus.seed_side = Side::Plus;
        const Eigen::MatrixXd vi = sample_matrix(s.curve, initial_construction(s.curve, s.info(k), m, beta, {k}), x);
        const Eigen::MatrixXd vm = sample_matrix(s.curve, general_construction(s.curve, s.info(k), m, beta, {}, minus), x);
        const Eigen::MatrixXd vp = sample_matrix(s.curve, general_construction(s.curve, s.info(k), m, beta, {}, plus), x);
        CHECK(span_gap(vm, vi) < 1e-8);
        CHECK(span_gap(vi, vm) < 1e-8);
        CHECK(span_gap(vm, vp) < 1e-8);
        CHECK(span_gap(vp, vm) < 1e-8);
      }
  }
}

TEST_CASE("seed side prescribes that side's coefficients") {
  const Setup s(make_circle(0.0, 0.0, testing::kR0), 8);
  const int k = s.cut.front();
  for (Side side : {Side::Minus, Side::Plus}) {
    BuildOptions opt{k};
    opt.seed_side = side;
    const IfeBasis b = general_construction(s.curve, s.info(k), 3, {1.0, 10.0}, {}, opt);
    CHECK(b.c(side) == Eigen::MatrixXd::Identity(10, 10));
  }
  const IfeBasis dflt = general_construction(s.curve, s.info(k), 2, {1.0, 10.0}, {}, {k});
  const double am = cut_subelement_rule(s.curve, s.info(k), Side::Minus, 4, 0.0).measure();
  const double ap = cut_subelement_rule(s.curve, s.info(k), Side::Plus, 4, 0.0).measure();
  CHECK(dflt.c(am >= ap ? Side::Minus : Side::Plus) == Eigen::MatrixXd::Identity(6, 6));
}

TEST_CASE("transform multiplies both sides") {
  const Setup s(make_circle(0.0, 0.0, testing::kR0), 8);
  const int k = s.cut.front();
  const IfeBasis b = general_construction(s.curve, s.info(k), 2, {1.0, 10.0}, {}, {k});
  Eigen::MatrixXd q = Eigen::MatrixXd::Random(6, 6);
  const IfeBasis t = transform(b, q, Construction::Recon2);
  CHECK(t.construction == Construction::Recon2);
  CHECK((t.c(Side::Minus) - b.c(Side::Minus) * q).norm() == 0.0);
  CHECK((t.c(Side::Plus) - b.c(Side::Plus) * q).norm() == 0.0);
}

TEST_CASE("eval_ife gradients match finite differences") {
  const Setup s(make_ellipse(0.1, -0.05, 0.6, 0.4), 24);
  const int k = s.cut[s.cut.size() / 2];
  const IfeBasis b = general_construction(s.curve, s.info(k), 3, {1.0, 10.0}, {}, {k});
  const double h = 1e-6;
  for (const Vec2& x : element_points(s.mesh, k, 10)) {
    const std::vector<Side> side(5, point_side(s.curve, x, 0.0));
    const std::vector<Vec2> pts{x, x + Vec2(h, 0), x - Vec2(h, 0), x + Vec2(0, h), x - Vec2(0, h)};
    const BasisValues v = eval_ife(s.curve, b, pts, &side);
    const Eigen::RowVectorXd fx = (v.value.row(1) - v.value.row(2)) / (2 * h);
    const Eigen::RowVectorXd fy = (v.value.row(3) - v.value.row(4)) / (2 * h);
    const double scale = 1 + v.dx.row(0).norm() + v.dy.row(0).norm();
    CHECK((fx - v.dx.row(0)).norm() < 1e-5 * scale);
    CHECK((fy - v.dy.row(0)).norm() < 1e-5 * scale);
  }
}

TEST_CASE("construction errors") {
  const Setup s(make_circle(0.0, 0.0, testing::kR0), 8);
  const int k = s.cut.front();
  auto kind_of = [](auto&& f) -> std::optional<ErrorKind> {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return std::nullopt;
  };
  CHECK(kind_of([&] { general_construction(s.curve, s.info(k), 2, {1, 10}, Eigen::MatrixXd::Identity(3, 3)); }) ==
        ErrorKind::ConfigError);
  CHECK(kind_of([&] { general_construction(s.curve, s.info(k), 0, {1, 10}); }) == ErrorKind::ConfigError);
  int inside = 0;
  while (s.info(inside).is_interface()) ++inside;
  CHECK(kind_of([&] { initial_construction(s.curve, s.info(inside), 2, {1, 10}); }) == ErrorKind::GeometryError);
  const PolyBasis2D wrong = frenet_monomial_basis(3, s.info(k).box);
  BuildOptions opt;
  opt.frenet = &wrong;
  CHECK(kind_of([&] { general_construction(s.curve, s.info(k), 2, {1, 10}, {}, opt); }) == ErrorKind::ConfigError);

  const IfeBasis b = general_construction(s.curve, s.info(k), 2, {1.0, 10.0});
  CHECK(kind_of([&] { reconstruct_2(b, Eigen::MatrixXd::Identity(4, 6)); }) == ErrorKind::RankDeficient);
  Eigen::MatrixXd flat = Eigen::MatrixXd::Random(20, 6);
  flat.col(5) = flat.col(0);
  CHECK(kind_of([&] { reconstruct_2(b, flat); }) == ErrorKind::RankDeficient);
  CHECK(kind_of([&] { reconstruct_1(b, -Eigen::MatrixXd::Identity(6, 6)); }) == ErrorKind::IndefiniteMass);

  IfeBasis broken = b;
  broken.coef[1](0, 0) += 1.0;
  CHECK(jump_residuals(s.curve, broken).max() > 1e-3);
}

TEST_CASE("construction names") {
  for (Construction c : {Construction::Initial, Construction::General, Construction::Recon1, Construction::Recon2})
    CHECK(parse_construction(to_string(c)) == c);
  CHECK_THROWS_AS(parse_construction("rec3"), Error);
}
