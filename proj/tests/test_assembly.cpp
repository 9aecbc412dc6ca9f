#include "doctest.h"

#include "gcife/assembly.hpp"
#include "gcife/errors.hpp"
#include "support.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace gcife;
using gcife::testing::uniform;

namespace {

const DomainBox kShifted{-1.003, 0.997, -0.998, 1.002};

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

struct Naive {
  Eigen::MatrixXd mass;
  Eigen::MatrixXd stiffness;
  Eigen::VectorXd load;
  double load_scale = 0.0;  // norm of |V|^T |f w|, the size of the terms being summed
};

/// Element matrices from point values of the basis, without the Frenet factors.
Naive naive_matrices(const IfeSpace& space, int k, const SideFunction& f) {
  const ElementRule& r = space.rule(k);
  const BasisValues v = space.evaluate(k, r.x, r.side);
  Eigen::VectorXd w(r.size()), beta(r.size()), fw(r.size());
  for (int q = 0; q < r.size(); ++q) {
    w[q] = r.w[q];
    beta[q] = r.w[q] * space.options().beta[r.side[q]];
    fw[q] = r.w[q] * f(r.x[q], r.side[q]);
  }
  return {v.value.transpose() * w.asDiagonal() * v.value,
          v.dx.transpose() * beta.asDiagonal() * v.dx + v.dy.transpose() * beta.asDiagonal() * v.dy,
          v.value.transpose() * fw, (v.value.cwiseAbs().transpose() * fw.cwiseAbs()).norm()};
}

Eigen::VectorXd element_values(const IfeSpace& space, const Eigen::VectorXd& coefs, int k,
                               const std::vector<Vec2>& x, const std::vector<Side>& side) {
  const int d = space.local_dim();
  return space.evaluate(k, x, side).value * coefs.segment(k * d, d);
}

}  // namespace

TEST_CASE("element rules integrate the element area") {
  const InterfaceCurve c = make_circle(0.0, 0.0, testing::kR0);
  const TriMesh mesh = generate_structured(10, kShifted);
  const IfeSpace space(mesh, c, {3, {1.0, 10.0}, Construction::General});
  for (int k = 0; k < mesh.num_elements(); ++k) {
    double a = 0.0;
    for (double w : space.rule(k).w) a += w;
    CHECK(a == doctest::Approx(mesh.area(k)).epsilon(1e-12));
  }
}

TEST_CASE("factorized element matrices match point evaluation") {
  const InterfaceCurve c = make_circle(0.0, 0.0, testing::kR0);
  const TriMesh mesh = generate_structured(12, kShifted);
  const SideFunction f = [](const Vec2& x, Side s) { return std::sin(3 * x.x()) + (s == Side::Plus ? x.y() : 0.0); };
  for (Construction kind : {Construction::Initial, Construction::General, Construction::Recon1, Construction::Recon2})
    for (int m = 1; m <= 5; ++m) {
      const IfeSpace space(mesh, c, {m, {1.0, 100.0}, kind});
      for (int k = 0; k < mesh.num_elements(); ++k) {
        const LocalMatrices lm = local_matrices(space, k, &f);
        const Naive nv = naive_matrices(space, k, f);
        CHECK(rel(lm.mass, nv.mass) < 1e-12);
        CHECK(rel(lm.stiffness, nv.stiffness) < 1e-12);
        CHECK((lm.load - nv.load).norm() < 1e-12 * nv.load_scale);
      }
    }
}

TEST_CASE("local mass is congruent under coefficient changes") {
  const InterfaceCurve c = make_ellipse(0.1, -0.05, 0.6, 0.4);
  const TriMesh mesh = generate_structured(24, kShifted);
  const IfeSpace space(mesh, c, {4, {1.0, 10.0}, Construction::General});
  for (int k = 0; k < mesh.num_elements(); ++k) {
    if (!space.is_interface(k)) continue;
    const IfeBasis& b = space.ife_basis(k);
    const auto f = side_factors(c, b, space.rule(k));
    const Eigen::MatrixXd q = Eigen::MatrixXd::Random(b.size(), b.size());
    const Eigen::MatrixXd lhs = local_mass(transform(b, q, Construction::General), f);
    const Eigen::MatrixXd rhs = q.transpose() * local_mass(b, f) * q;
    CHECK(rel(lhs, rhs) < 1e-12);
  }
}

TEST_CASE("reconstructions orthonormalize the interface blocks") {
  const InterfaceCurve c = make_circle(0.0, 0.0, testing::kR0);
  const TriMesh mesh = generate_structured(10, kShifted);
  for (Construction kind : {Construction::Recon1, Construction::Recon2})
    for (int m = 1; m <= 5; ++m)
      for (double bp : {10.0, 1000.0}) {
        const IfeSpace space(mesh, c, {m, {1.0, bp}, kind});
        const ConditionReport rep = condition_report(space);
        CHECK(rep.num_interface > 0);
        CHECK(std::abs(rep.max_interface - 1.0) < 1e-6);
        for (int k = 0; k < mesh.num_elements(); ++k) {
          if (!space.is_interface(k)) continue;
          const Eigen::MatrixXd mass = local_matrices(space, k).mass;
          CHECK(rel(mass, Eigen::MatrixXd::Identity(mass.rows(), mass.cols())) < 1e-6);
          CHECK(jump_residuals(c, space.ife_basis(k)).max() < 1e-9);
        }
      }
}

TEST_CASE("reconstructions keep the general span") {
  const InterfaceCurve c = make_circle(0.0, 0.0, testing::kR0);
  const TriMesh mesh = generate_structured(10, kShifted);
  const IfeSpace gen(mesh, c, {3, {1.0, 10.0}, Construction::General});
  const IfeSpace r1(mesh, c, {3, {1.0, 10.0}, Construction::Recon1});
  const IfeSpace r2(mesh, c, {3, {1.0, 10.0}, Construction::Recon2});
  for (int k = 0; k < mesh.num_elements(); ++k) {
    if (!gen.is_interface(k)) continue;
    const ElementRule& r = gen.rule(k);
    const Eigen::MatrixXd vg = gen.evaluate(k, r).value;
    for (const IfeSpace* s : {&r1, &r2}) {
      const Eigen::MatrixXd v = s->evaluate(k, r).value;
      const Eigen::MatrixXd q = vg.colPivHouseholderQr().solve(v);
      CHECK(rel(vg * q, v) < 1e-9);
    }
  }
}

TEST_CASE("non-interface blocks are scaled identities") {
  const InterfaceCurve c = make_circle(0.0, 0.0, testing::kR0);
  const TriMesh mesh = generate_structured(8, kShifted);
  const IfeSpace space(mesh, c, {4, {1.0, 10.0}, Construction::Recon2});
  for (int k = 0; k < mesh.num_elements(); ++k) {
    if (space.is_interface(k)) continue;
    const Eigen::MatrixXd mass = local_matrices(space, k).mass;
    CHECK(rel(mass, 2.0 * mesh.area(k) * Eigen::MatrixXd::Identity(15, 15)) < 1e-12);
  }
  const ConditionReport rep = condition_report(space);
  CHECK(rep.max_noninterface == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(rep.global == std::max(rep.max_interface, rep.max_noninterface));
  CHECK(rep.spectral >= rep.global * (1 - 1e-12));
}

TEST_CASE("constants lie in the space and carry no energy") {
  for (const InterfaceCurve& c : {make_circle(0.0, 0.0, testing::kR0), make_ellipse(0.1, -0.05, 0.6, 0.4)}) {
    const TriMesh mesh = generate_structured(24, kShifted);
    for (Construction kind : {Construction::Initial, Construction::General, Construction::Recon2}) {
      const IfeSpace space(mesh, c, {3, {1.0, 50.0}, kind});
      const Projection p = l2_project(space, [](const Vec2&, Side) { return 1.0; });
      const int d = space.local_dim();
      for (int k = 0; k < mesh.num_elements(); ++k) {
        const ElementRule& r = space.rule(k);
        const Eigen::VectorXd v = element_values(space, p.coefs, k, r.x, r.side);
        CHECK((v.array() - 1.0).abs().maxCoeff() < 1e-9);
        const Eigen::VectorXd ck = p.coefs.segment(k * d, d);
        const LocalMatrices lm = local_matrices(space, k);
        CHECK(std::abs(ck.dot(lm.stiffness * ck)) < 1e-9 * lm.stiffness.norm() * ck.squaredNorm());
      }
    }
  }
}

TEST_CASE("projection reproduces polynomials across a straight interface") {
  // the Frenet coordinates of a line are affine in x, so P_m is in the space
  const InterfaceCurve line = make_line(0.05, -0.03, 0.6, 0.8);
  const TriMesh mesh = generate_structured(8, kShifted);
  for (int m = 1; m <= 4; ++m) {
    testing::RandomFrenetPoly poly = testing::random_frenet_poly(m, 1.0);
    const SideFunction u = [&](const Vec2& x, Side) { return poly.value(x.x(), x.y()); };
    const IfeSpace space(mesh, line, {m, {2.0, 2.0}, Construction::Recon2});
    const Projection p = l2_project(space, u);
    CHECK(p.ill_conditioned == 0);
    for (int k = 0; k < mesh.num_elements(); ++k) {
      const ElementRule& r = space.rule(k);
      const Eigen::VectorXd v = element_values(space, p.coefs, k, r.x, r.side);
      for (int q = 0; q < r.size(); ++q) CHECK(std::abs(v[q] - u(r.x[q], r.side[q])) < 1e-9);
    }
  }
}

TEST_CASE("space options are validated") {
  const InterfaceCurve c = make_circle(0.0, 0.0, testing::kR0);
  const TriMesh mesh = generate_structured(4, kShifted);
  CHECK_THROWS_AS(IfeSpace(mesh, c, {0, {1.0, 10.0}, Construction::General}), Error);
  CHECK_THROWS_AS(IfeSpace(mesh, c, {10, {1.0, 10.0}, Construction::General}), Error);
  CHECK_THROWS_AS(IfeSpace(mesh, c, {2, {-1.0, 10.0}, Construction::General}), Error);
  const IfeSpace space(mesh, c, {2, {1.0, 10.0}, Construction::General});
  int inside = 0;
  while (space.is_interface(inside)) ++inside;
  CHECK_THROWS_AS(space.ife_basis(inside), Error);
}
