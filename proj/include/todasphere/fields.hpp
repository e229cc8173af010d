// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0
//
// Energies on pairs of scalar fields: the coupled quadratic form Q, the
// two-component functional J, the scalar functional I, exponential-moment
// deficits (classical, coupled, and the improved variants with volume
// spreading hypotheses), and localized energy evaluation via per-face
// gradients.
#pragma once

#include <Eigen/Core>
#include <variant>
#include <vector>

#include "todasphere/mesh.hpp"

namespace toda {

// Two H^1 fields on a common mesh.
struct FieldPair {
  Eigen::VectorXd u1;
  Eigen::VectorXd u2;
};

// Coupling strengths and (positive) weight functions of the two equations.
struct RhoParams {
  double rho1 = 0.0;
  double rho2 = 0.0;
  Eigen::VectorXd h1;  // empty means h == 1
  Eigen::VectorXd h2;

  // Throws ConfigError unless rho_i > 0 and the weights are strictly
  // positive fields on the mesh (or empty).
  void validate(const SphereMesh& mesh) const;
};

// Distance from (rho1, rho2) to the critical grid where compactness can
// fail: pairs with either coordinate a positive multiple of 4*pi.
double distance_to_critical_set(double rho1, double rho2);

// Average of u (the surface has unit area, so this is also the integral).
double mean_value(const SphereMesh& mesh, const Eigen::VectorXd& u);

// log of the exponential moment, max-subtracted for overflow safety.
double log_integral_exp(const SphereMesh& mesh, const Eigen::VectorXd& u);
double log_integral_exp(const SphereMesh& mesh, const Eigen::VectorXd& u,
                        const Eigen::VectorXd& h);

// f = e^u / integral(e^u): positive, integrates to 1.
Eigen::VectorXd normalized_density(const SphereMesh& mesh,
                                   const Eigen::VectorXd& u);

// Coupled quadratic form (1/3) * integral(|grad u1|^2 + |grad u2|^2
//                                         + grad u1 . grad u2).
double q_energy(const SphereMesh& mesh, const FieldPair& pair);

// Two-component energy: Q plus sum_i rho_i (mean u_i - log int h_i e^{u_i}).
// Invariant under adding constants to either component.
double j_rho(const SphereMesh& mesh, const FieldPair& pair,
             const RhoParams& params);

// Scalar energy (1/2) int |grad u|^2 + 2 rho (mean u - log int h e^u).
double i_rho(const SphereMesh& mesh, const Eigen::VectorXd& u, double rho,
             const Eigen::VectorXd& h = Eigen::VectorXd());

// Classical exponential-moment deficit:
//   (1/2) int |grad u|^2 - 8 pi log int e^{u - mean u}.
// Bounded below by a mesh-independent constant.
double mt_deficit(const SphereMesh& mesh, const Eigen::VectorXd& u);

// Coupled deficit: int Q - 4 pi log int e^{u1 - mean} - 4 pi log int
// e^{u2 - mean}.
double jw_deficit(const SphereMesh& mesh, const FieldPair& pair);

// ---------------------------------------------------------------------------
// Improved deficits with volume-spreading hypotheses
// ---------------------------------------------------------------------------

// Spreading across k+1 (resp. l+1) regions at mutual distance >= delta,
// each carrying at least a theta fraction of the respective density.  The
// regions are searched as balls of radius delta/4 around greedily chosen
// mesh vertices whose centers stay 1.5*delta apart.
struct MacroscopicMode {
  int k = 1;
  int l = 0;
  double delta = 0.1;
  double theta = 0.1;
};

// First density concentrated near z at scale sigma (mass > gamma0 in
// B_{sigma/2}(z)) while the second both carries mass > gamma0 on the
// annulus A_z(C*sigma, r/C) and is spread over it (no ball B_{tau0 d(y,z)}(y)
// holds a 1-tau0 fraction of the annulus mass).  C is a fixed internal
// constant; sigma must lie in (0, r/C^2).
struct ScalingInvariantMode {
  SurfacePoint z;
  double sigma = 0.0;
  double r = 0.0;
  double tau0 = 0.1;
  double gamma0 = 0.1;
};

// Weighted-moment variant for a single field v supported in B_r(p): the
// moment integral uses the weight d(x,p)^2 against e^{2v}, and spreading
// requires no ball B_{tau0 d(y,p)}(y) to dominate the moment.
struct SingularMode {
  SurfacePoint p;
  double r = 0.0;
  double tau0 = 0.1;
};

using DeficitMode =
    std::variant<MacroscopicMode, ScalingInvariantMode, SingularMode>;

struct ImprovedDeficit {
  double deficit = 0.0;      // RHS minus LHS, without the unknown constant
  bool hypotheses_met = false;
};

// Evaluates the improved inequality selected by mode on the pair (the
// singular mode reads only the first component as v).  The deficit is
// reported raw so an additive constant can be fitted across a family.
ImprovedDeficit improved_deficit(const SphereMesh& mesh, const FieldPair& pair,
                                 const DeficitMode& mode, double eps);

// ---------------------------------------------------------------------------
// Per-face gradients and localized energies
// ---------------------------------------------------------------------------

// Constant gradient of the piecewise-linear interpolant on each face
// (tangent to the face plane).
std::vector<Vec3> face_gradients(const SphereMesh& mesh,
                                 const Eigen::VectorXd& u);

// Dirichlet energy restricted to faces whose centroid lies in B_r(c).
double localized_dirichlet(const SphereMesh& mesh, const Eigen::VectorXd& u,
                           const SurfacePoint& c, double r);

// Q-energy restricted the same way.
double localized_q(const SphereMesh& mesh, const FieldPair& pair,
                   const SurfacePoint& c, double r);

// Quadrature-weighted mass of f over the vertices in B_r(c).
double integrate_ball(const SphereMesh& mesh, const Eigen::VectorXd& f,
                      const SurfacePoint& c, double r);

// Mass over the annulus r_in <= d < r_out.
double integrate_annulus(const SphereMesh& mesh, const Eigen::VectorXd& f,
                         const SurfacePoint& c, double r_in, double r_out);

}  // namespace toda
