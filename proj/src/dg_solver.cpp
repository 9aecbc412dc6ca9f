#include "gcife/dg_solver.hpp"

#include "gcife/errors.hpp"
#include "gcife/parallel.hpp"
#include "gcife/quadrature.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gcife {

namespace {

struct Block {
  int row = 0;
  int col = 0;
  Eigen::MatrixXd m;
};

struct Trace {
  Eigen::MatrixXd value;
  Eigen::MatrixXd flux;  // beta grad . n
};

Trace trace(const IfeSpace& space, int k, const SidedQuad& q, const Vec2& n) {
  const BasisValues v = space.evaluate(k, q.x, q.side);
  Trace t{v.value, n.x() * v.dx + n.y() * v.dy};
  for (int i = 0; i < q.size(); ++i) t.flux.row(i) *= space.options().beta[q.side[i]];
  return t;
}

struct EdgeTerms {
  std::vector<Block> blocks;
  Eigen::VectorXd load;  // boundary edges only
};

EdgeTerms edge_terms(const IfeSpace& space, int e, double penalty, const SipdgConfig& cfg, int points) {
  const TriMesh& mesh = space.mesh();
  const Edge& edge = mesh.edges()[e];
  const Vec2& a = mesh.vertices()[edge.v[0]];
  const Vec2& b = mesh.vertices()[edge.v[1]];
  const double len = (b - a).norm();
  const Vec2 n = apply_q((b - a) / len);  // out of the left element
  const SidedQuad q = edge_rule(a, b, space.classification().edge_cuts[e], points);
  const Eigen::Map<const Eigen::VectorXd> w(q.w.data(), q.size());
  const double s = penalty / len;
  const int d = space.local_dim();
  EdgeTerms out;

  const Trace tl = trace(space, edge.left, q, n);
  if (edge.right == kBoundary) {
    // one-sided trace with g in place of the missing neighbour
    const Eigen::MatrixXd& v = tl.value;
    const Eigen::MatrixXd& f = tl.flux;
    const Eigen::MatrixXd cross = f.transpose() * w.asDiagonal() * v;
    out.blocks.push_back({edge.left, edge.left,
                          -cross - cross.transpose() + s * v.transpose() * w.asDiagonal() * v});
    Eigen::VectorXd g(q.size());
    for (int i = 0; i < q.size(); ++i) g[i] = w[i] * cfg.boundary(q.x[i], q.side[i]);
    out.load = -f.transpose() * g + s * v.transpose() * g;
    return out;
  }
  const Trace tr = trace(space, edge.right, q, n);
  Eigen::MatrixXd jump(q.size(), 2 * d), avg(q.size(), 2 * d);
  jump << tl.value, -tr.value;
  avg << 0.5 * tl.flux, 0.5 * tr.flux;
  const Eigen::MatrixXd cross = avg.transpose() * w.asDiagonal() * jump;
  const Eigen::MatrixXd m = -cross - cross.transpose() + s * jump.transpose() * w.asDiagonal() * jump;
  const int ids[2] = {edge.left, edge.right};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.blocks.push_back({ids[i], ids[j], m.block(i * d, j * d, d, d)});
  return out;
}

void add_block(std::vector<Eigen::Triplet<double>>& t, const Block& b, int d) {
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) t.emplace_back(b.row * d + i, b.col * d + j, b.m(i, j));
}

/// Preconditioned CG with the inverse diagonal blocks.
DiscreteSolution block_jacobi_cg(const IfeSpace& space, const GlobalSystem& sys, const SipdgConfig& cfg) {
  const int d = space.local_dim(), ne = space.num_elements(), n = space.num_dofs();
  std::vector<Eigen::LLT<Eigen::MatrixXd>> blocks(ne);
  for (int k = 0; k < ne; ++k) {
    Eigen::MatrixXd blk = Eigen::MatrixXd(sys.a.block(k * d, k * d, d, d));
    blocks[k].compute(blk);
    if (blocks[k].info() != Eigen::Success)
      fail(ErrorKind::SingularMatrix, fmt::format("diagonal block {} is not positive definite", k));
  }
  auto precond = [&](const Eigen::VectorXd& r) {
    Eigen::VectorXd z(n);
    for (int k = 0; k < ne; ++k) z.segment(k * d, d) = blocks[k].solve(r.segment(k * d, d));
    return z;
  };
  const int max_it = cfg.cg_max_iterations > 0 ? cfg.cg_max_iterations : n;
  const double bnorm = sys.b.norm();
  DiscreteSolution out{&space, Eigen::VectorXd::Zero(n)};
  if (bnorm == 0.0) return out;
  Eigen::VectorXd r = sys.b, z = precond(r), p = z;
  double rz = r.dot(z);
  int it = 0;
  while (r.norm() > cfg.cg_tolerance * bnorm) {
    if (it == max_it)
      fail(ErrorKind::NoConvergence, fmt::format("CG stopped at relative residual {:.3e} after {} iterations",
                                                 r.norm() / bnorm, it));
    const Eigen::VectorXd ap = sys.a * p;
    const double alpha = rz / p.dot(ap);
    out.coefs += alpha * p;
    r -= alpha * ap;
    z = precond(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
    ++it;
  }
  out.iterations = it;
  out.residual = (sys.a * out.coefs - sys.b).norm() / bnorm;
  return out;
}

template <class Factor>
DiscreteSolution direct_solve(const IfeSpace& space, const GlobalSystem& sys) {
  Factor f;
  f.compute(sys.a);
  if (f.info() != Eigen::Success)
    fail(ErrorKind::SingularMatrix, "factorization failed; the penalty may be too small");
  DiscreteSolution out{&space, f.solve(sys.b)};
  if (f.info() != Eigen::Success || !out.coefs.allFinite())
    fail(ErrorKind::SingularMatrix, "solve failed after factorization");
  const double bnorm = sys.b.norm();
  out.residual = bnorm > 0 ? (sys.a * out.coefs - sys.b).norm() / bnorm : 0.0;
  return out;
}

}  // namespace

std::string_view to_string(LinearSolver s) { return s == LinearSolver::Direct ? "direct" : "cg"; }

LinearSolver parse_linear_solver(std::string_view s) {
  if (s == "direct") return LinearSolver::Direct;
  if (s == "cg") return LinearSolver::CgBlockJacobi;
  fail(ErrorKind::ConfigError, fmt::format("unknown linear solver '{}'", s));
}

double edge_penalty(const SipdgConfig& cfg, const SpaceOptions& opt) {
  const double sigma0 = cfg.sigma0 > 0 ? cfg.sigma0 : double(opt.degree * opt.degree);
  const double hi = std::max(opt.beta.minus, opt.beta.plus), lo = std::min(opt.beta.minus, opt.beta.plus);
  return sigma0 * hi * hi / lo;
}

GlobalSystem sipdg_assemble(const IfeSpace& space, const SipdgConfig& cfg) {
  if (cfg.sigma0 < 0) fail(ErrorKind::ConfigError, "sigma0 must be positive");
  if (!cfg.source || !cfg.boundary) fail(ErrorKind::ConfigError, "source and boundary data are required");
  const int d = space.local_dim(), ne = space.num_elements();
  const int ned = static_cast<int>(space.mesh().edges().size());
  const int points = cfg.edge_points > 0 ? cfg.edge_points : space.degree() + 2;
  GlobalSystem sys;
  sys.penalty = edge_penalty(cfg, space.options());

  std::vector<LocalMatrices> vol(ne);
  parallel_for(ne, cfg.threads, [&](int k) { vol[k] = local_matrices(space, k, &cfg.source); });
  std::vector<EdgeTerms> edges(ned);
  parallel_for(ned, cfg.threads, [&](int e) { edges[e] = edge_terms(space, e, sys.penalty, cfg, points); });

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(d) * d * (ne + 4 * ned));
  sys.b = Eigen::VectorXd::Zero(space.num_dofs());
  for (int k = 0; k < ne; ++k) {
    add_block(t, {k, k, vol[k].stiffness}, d);
    sys.b.segment(k * d, d) += vol[k].load;
  }
  for (int e = 0; e < ned; ++e) {
    for (const Block& b : edges[e].blocks) add_block(t, b, d);
    if (edges[e].load.size() > 0) sys.b.segment(space.mesh().edges()[e].left * d, d) += edges[e].load;
  }
  sys.a.resize(space.num_dofs(), space.num_dofs());
  sys.a.setFromTriplets(t.begin(), t.end());
  return sys;
}

DiscreteSolution solve(const IfeSpace& space, const GlobalSystem& system, const SipdgConfig& cfg) {
  if (cfg.solver == LinearSolver::CgBlockJacobi) return block_jacobi_cg(space, system, cfg);
  return direct_solve<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>(space, system);
}

ErrorNorms error_norms(const IfeSpace& space, const Eigen::VectorXd& coefs, const SideFunction& u,
                       const SideGradient& grad) {
  const int d = space.local_dim(), ne = space.num_elements();
  std::vector<std::array<double, 2>> part(ne);
  parallel_for(ne, space.options().threads, [&](int k) {
    const ElementRule& r = space.rule(k);
    const BasisValues v = space.evaluate(k, r);
    const Eigen::VectorXd c = coefs.segment(k * d, d);
    const Eigen::VectorXd uh = v.value * c, gx = v.dx * c, gy = v.dy * c;
    double l2 = 0.0, h1 = 0.0;
    for (int q = 0; q < r.size(); ++q) {
      const Vec2 g = grad(r.x[q], r.side[q]);
      l2 += r.w[q] * std::pow(uh[q] - u(r.x[q], r.side[q]), 2);
      h1 += r.w[q] * (std::pow(gx[q] - g.x(), 2) + std::pow(gy[q] - g.y(), 2));
    }
    part[k] = {l2, h1};
  });
  double l2 = 0.0, h1 = 0.0;
  for (const auto& p : part) {
    l2 += p[0];
    h1 += p[1];
  }
  return {std::sqrt(l2), std::sqrt(h1)};
}

double CircleProblem::u(const Vec2& x, Side s) const {
  const double c = std::cos(std::numbers::pi * x.squaredNorm());
  if (s == Side::Minus) return c / beta.minus;
  return c / beta.plus + std::cos(std::numbers::pi * r0 * r0) * (1.0 / beta.minus - 1.0 / beta.plus);
}

Vec2 CircleProblem::grad(const Vec2& x, Side s) const {
  // d/dx cos(pi r^2) = -2 pi x sin(pi r^2)
  return -2.0 * std::numbers::pi * std::sin(std::numbers::pi * x.squaredNorm()) / beta[s] * x;
}

double CircleProblem::source(const Vec2& x, Side) const {
  const double r2 = x.squaredNorm(), pi = std::numbers::pi;
  return 4.0 * pi * std::sin(pi * r2) + 4.0 * pi * pi * r2 * std::cos(pi * r2);
}

SideFunction CircleProblem::u_fn() const {
  return [p = *this](const Vec2& x, Side s) { return p.u(x, s); };
}

SideGradient CircleProblem::grad_fn() const {
  return [p = *this](const Vec2& x, Side s) { return p.grad(x, s); };
}

SideFunction CircleProblem::source_fn() const {
  return [p = *this](const Vec2& x, Side s) { return p.source(x, s); };
}

}  // namespace gcife
