#pragma once

// The broken IFE space over a classified mesh and its element matrices.

#include "gcife/curve.hpp"
#include "gcife/ife_space.hpp"
#include "gcife/mesh.hpp"

#include <Eigen/Core>

#include <array>
#include <functional>
#include <vector>

namespace gcife {

/// Scalar field with a side tag; the tag selects the branch of piecewise data.
using SideFunction = std::function<double(const Vec2&, Side)>;
using SideGradient = std::function<Vec2(const Vec2&, Side)>;

struct SpaceOptions {
  int degree = 1;
  Coefficients beta{1.0, 10.0};
  Construction construction = Construction::General;
  int volume_points = 0;     // Gauss points per direction; 0 selects m + 2
  int interface_points = 0;  // Gauss points for constraint integrals; 0 selects m + 2
  int threads = 1;
};

struct ElementRule {
  std::vector<Vec2> x;
  std::vector<double> w;
  std::vector<Side> side;
  std::vector<FrenetPoint> frenet;  // interface elements only

  int size() const { return static_cast<int>(w.size()); }
};

/// n Gauss points per direction on every patch; straight elements get the
/// collapsed rule of the matching degree.
ElementRule element_rule(const TriMesh& mesh, const InterfaceCurve& curve, const ElementInfo& info,
                         int k, int n);

/// Holds references to the mesh and curve, which must outlive it.
class IfeSpace {
 public:
  IfeSpace(const TriMesh& mesh, const InterfaceCurve& curve, SpaceOptions opt);
  IfeSpace(const TriMesh& mesh, const InterfaceCurve& curve, Classification cls, SpaceOptions opt);

  const TriMesh& mesh() const { return *mesh_; }
  const InterfaceCurve& curve() const { return *curve_; }
  const Classification& classification() const { return cls_; }
  const SpaceOptions& options() const { return opt_; }
  int degree() const { return opt_.degree; }
  int local_dim() const { return dim_p(opt_.degree); }
  int num_elements() const { return mesh_->num_elements(); }
  int num_dofs() const { return num_elements() * local_dim(); }
  int volume_points() const;

  bool is_interface(int k) const { return ife_index_[k] >= 0; }
  const IfeBasis& ife_basis(int k) const;
  /// Side of a non-interface element.
  Side element_side(int k) const;
  const ElementRule& rule(int k) const { return rules_[k]; }

  BasisValues evaluate(int k, const std::vector<Vec2>& x, const std::vector<Side>& side) const;
  BasisValues evaluate(int k, const ElementRule& r) const;

 private:
  void build();

  const TriMesh* mesh_;
  const InterfaceCurve* curve_;
  Classification cls_;
  SpaceOptions opt_;
  std::vector<ElementRule> rules_;
  std::vector<int> ife_index_;
  std::vector<IfeBasis> ife_;
};

/// Frenet Vandermonde factors of one side: rows are that side's nodes.
struct SideFactors {
  Eigen::MatrixXd l;
  Eigen::MatrixXd l_eta;
  Eigen::MatrixXd l_xi;
  Eigen::VectorXd w;
  Eigen::VectorXd w_rho2;  // w times rho^2 at the node
  std::vector<Vec2> x;
};

std::array<SideFactors, 2> side_factors(const InterfaceCurve& curve, const IfeBasis& basis,
                                        const ElementRule& rule);

/// sum_s (C^s)^T L^s W^s (L^s)^T C^s.
Eigen::MatrixXd local_mass(const IfeBasis& basis, const std::array<SideFactors, 2>& f);
/// sum_s beta^s (C^s)^T [L_eta W L_eta^T + L_xi (rho^2 W) L_xi^T] C^s.
Eigen::MatrixXd local_stiffness(const IfeBasis& basis, const std::array<SideFactors, 2>& f);
/// sum_s (C^s)^T L^s W^s r^s with r^s the source at the side-s nodes.
Eigen::VectorXd local_load(const IfeBasis& basis, const std::array<SideFactors, 2>& f,
                           const SideFunction& source);
/// W^{1/2} [L^- C^-; L^+ C^+].
Eigen::MatrixXd weighted_vandermonde(const IfeBasis& basis, const std::array<SideFactors, 2>& f);

struct LocalMatrices {
  Eigen::MatrixXd mass;
  Eigen::MatrixXd stiffness;
  Eigen::VectorXd load;
};

/// Element matrices of any element of the space; the load is empty without a source.
LocalMatrices local_matrices(const IfeSpace& space, int k, const SideFunction* source = nullptr);

struct ConditionReport {
  std::vector<double> element_cond;
  double max_interface = 0.0;     // 0 when no element is cut
  double max_noninterface = 0.0;
  double global = 0.0;            // largest block condition
  double spectral = 0.0;          // largest over smallest eigenvalue across all blocks
  int num_interface = 0;
};

ConditionReport condition_report(const IfeSpace& space);

struct Projection {
  Eigen::VectorXd coefs;  // element k owns [k d_m, (k+1) d_m)
  int ill_conditioned = 0;  // elements whose mass condition exceeds 1e12
  double max_cond = 0.0;
};

Projection l2_project(const IfeSpace& space, const SideFunction& u);

}  // namespace gcife
