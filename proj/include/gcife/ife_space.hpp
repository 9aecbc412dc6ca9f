#pragma once

// Geometry-conforming IFE bases on interface elements: each basis function is
// a pair of polynomials in Frenet coordinates, one per side of the interface,
// tied together by weak jump conditions on the line eta = 0.

#include "gcife/curve.hpp"
#include "gcife/mesh.hpp"
#include "gcife/poly_basis.hpp"

#include <Eigen/Core>

#include <array>
#include <optional>
#include <string_view>
#include <vector>

namespace gcife {

enum class Construction { Initial, General, Recon1, Recon2 };

std::string_view to_string(Construction c);
/// Accepts "initial", "general", "recon1", "recon2".
Construction parse_construction(std::string_view s);

/// Piecewise constant diffusion coefficient.
struct Coefficients {
  double minus = 1.0;
  double plus = 1.0;

  double operator[](Side s) const { return s == Side::Minus ? minus : plus; }
};

struct IfeBasis {
  int element = -1;
  int degree = 0;
  Construction construction = Construction::General;
  Coefficients beta;
  FrenetBox box;
  double xi_ref = 0.0;
  PolyBasis2D frenet;                // R_l, eta powers times Legendre in xi
  std::array<Eigen::MatrixXd, 2> coef;  // C^-, C^+; column j holds lambda_j on that side

  int size() const { return frenet.size(); }
  const Eigen::MatrixXd& c(Side s) const { return coef[static_cast<int>(s)]; }
};

/// Rows of the weak jump conditions: continuity (m+1), flux (m), then the
/// extended conditions ordered by eta-derivative n and test index k.
struct ConstraintSystem {
  Eigen::MatrixXd a;
  Eigen::VectorXd j;  // 1 on continuity rows, beta^- / beta^+ elsewhere
  int num_continuity = 0;
  int num_flux = 0;
  int num_extended = 0;
};

ConstraintSystem constraint_system(const InterfaceCurve& curve, const PolyBasis2D& frenet,
                                   const FrenetBox& box, Coefficients beta, int gauss_points);

/// Extended rows restricted to the columns eta^a p_b with a >= 2, and the
/// extended rows of the columns p_i (one right-hand side per column).
struct InitialSystem {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  std::vector<int> unknowns;  // graded indices of the a >= 2 columns
};

InitialSystem initial_system(const ConstraintSystem& sys, int m);

struct BuildOptions {
  int element = -1;
  int interface_points = 0;  // Gauss points for the constraint integrals; 0 selects m + 2
  // R_l for the general construction, frenet_monomial_basis when null. The
  // initial construction always uses interface_monomial_basis.
  const PolyBasis2D* frenet = nullptr;
  // Side whose coefficients are prescribed in the general construction; the
  // side with the larger area when unset.
  std::optional<Side> seed_side;
};

IfeBasis initial_construction(const InterfaceCurve& curve, const ElementInfo& elem, int m,
                              Coefficients beta, const BuildOptions& opt = {});

/// Prescribes the coefficients of the seed side (the identity without a seed)
/// and solves the other side from A C^+ = J A C^-.
IfeBasis general_construction(const InterfaceCurve& curve, const ElementInfo& elem, int m,
                              Coefficients beta, const std::optional<Eigen::MatrixXd>& seed = {},
                              const BuildOptions& opt = {});

/// C <- C V Lambda^{-1/2} from the spectral factorization of the local mass.
IfeBasis reconstruct_1(const IfeBasis& basis, const Eigen::MatrixXd& mass);

/// C <- C V Sigma^{-1} from the reduced SVD of the weighted Vandermonde
/// W^{1/2} [L^- C^-; L^+ C^+].
IfeBasis reconstruct_2(const IfeBasis& basis, const Eigen::MatrixXd& weighted_vandermonde);

/// C^s <- C^s Q on both sides.
IfeBasis transform(const IfeBasis& basis, const Eigen::MatrixXd& q, Construction tag);

/// Rows are points, columns are basis functions.
struct BasisValues {
  Eigen::MatrixXd value;
  Eigen::MatrixXd dx;
  Eigen::MatrixXd dy;
};

std::vector<FrenetPoint> frenet_points(const InterfaceCurve& curve, const IfeBasis& basis,
                                       const std::vector<Vec2>& x);

/// Values and physical gradients. Without sides the side of each point is the
/// sign of eta.
BasisValues eval_ife(const InterfaceCurve& curve, const IfeBasis& basis, const std::vector<Vec2>& x,
                     const std::vector<Side>* sides = nullptr);

/// Same, for points already in Frenet coordinates.
BasisValues eval_ife(const InterfaceCurve& curve, const IfeBasis& basis,
                     const std::vector<FrenetPoint>& p, const std::vector<Side>& sides);

/// Residual of each condition family relative to the largest constraint term
/// of the same basis function (rows equilibrated), one entry per function.
struct JumpResiduals {
  Eigen::VectorXd continuity;
  Eigen::VectorXd flux;
  Eigen::VectorXd extended;

  double max() const;
};

JumpResiduals jump_residuals(const InterfaceCurve& curve, const IfeBasis& basis,
                             int gauss_points = 0);

/// Singular value ratio sigma_max / sigma_min.
double condition_number(const Eigen::MatrixXd& a);

}  // namespace gcife
