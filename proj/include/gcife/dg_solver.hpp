#pragma once

// Symmetric interior penalty DG for -div(beta grad u) = f over the broken IFE
// space, with Dirichlet data imposed by Nitsche terms on the boundary edges.

#include "gcife/assembly.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <string_view>

namespace gcife {

enum class LinearSolver { Direct, CgBlockJacobi };

std::string_view to_string(LinearSolver s);
/// Accepts "direct" and "cg".
LinearSolver parse_linear_solver(std::string_view s);

struct SipdgConfig {
  double sigma0 = 0.0;  // 0 selects m^2
  SideFunction source;
  SideFunction boundary;  // Dirichlet data g
  LinearSolver solver = LinearSolver::Direct;
  double cg_tolerance = 1e-13;  // relative residual
  int cg_max_iterations = 0;    // 0 selects the number of unknowns
  int edge_points = 0;          // Gauss points per edge piece; 0 selects m + 2
  int threads = 1;
};

/// sigma0 max(beta)^2 / min(beta); divided by |e| inside the edge terms.
double edge_penalty(const SipdgConfig& cfg, const SpaceOptions& opt);

struct GlobalSystem {
  Eigen::SparseMatrix<double> a;
  Eigen::VectorXd b;
  double penalty = 0.0;
};

GlobalSystem sipdg_assemble(const IfeSpace& space, const SipdgConfig& cfg);

struct DiscreteSolution {
  const IfeSpace* space = nullptr;
  Eigen::VectorXd coefs;  // element k owns [k d_m, (k+1) d_m)
  double residual = 0.0;  // ||A x - b|| / ||b||
  int iterations = 0;     // 0 for the direct solver
};

/// Throws SingularMatrix when the factorization fails and NoConvergence when
/// CG stops above its tolerance.
DiscreteSolution solve(const IfeSpace& space, const GlobalSystem& system, const SipdgConfig& cfg);

struct ErrorNorms {
  double l2 = 0.0;
  double h1 = 0.0;  // broken seminorm
};

ErrorNorms error_norms(const IfeSpace& space, const Eigen::VectorXd& coefs, const SideFunction& u,
                       const SideGradient& grad);

/// Circular interface of radius r0 centred at the origin, minus side inside:
/// u = cos(pi r^2) / beta^- inside and cos(pi r^2) / beta^+ + cos(pi r0^2) (1/beta^- - 1/beta^+)
/// outside, so u and beta du/dn are continuous.
struct CircleProblem {
  double r0 = 0.0;
  Coefficients beta;

  double u(const Vec2& x, Side s) const;
  Vec2 grad(const Vec2& x, Side s) const;
  double source(const Vec2& x, Side s) const;

  SideFunction u_fn() const;
  SideGradient grad_fn() const;
  SideFunction source_fn() const;
};

}  // namespace gcife
