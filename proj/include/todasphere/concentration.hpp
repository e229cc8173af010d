// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0
//
// Center/scale diagnostics for concentrated densities: the balance scale
// sigma(x, f) equating inner and outer mass, the concentration statistic
// T(x, f), the center-of-mass/scale descriptor, per-site local scales of
// multi-site densities, the blended global scales of a pair of fields, the
// join parameter comparing them, and the refined projection of a pair into
// join elements (atomic part, auxiliary point, join parameter).
#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "todasphere/density.hpp"
#include "todasphere/measures.hpp"
#include "todasphere/mesh.hpp"

namespace toda {

// Unit-mass measure supported in the closed ball B_radius(center).
struct LocalizedDensity {
  Density f;
  SurfacePoint center;
  double radius = 0.0;

  LocalizedDensity(Density f_in, const SurfacePoint& center_in,
                   double radius_in);

  // True when more than 1 - eps of the mass sits inside B_eps(center).
  bool concentrated(double eps) const;
};

// Restriction of a probability density to B_r(x0), renormalized to unit
// mass.  Raises DomainError when the ball carries no mass.
LocalizedDensity localize(const Density& f, const SurfacePoint& x0, double r);

struct ConcentrationDescriptor {
  SurfacePoint beta;   // radially projected center of mass
  double sigma = 0.0;  // concentration scale
};

// The balance scale at x: the unique radius where the mass inside
// B_sigma(x) equals the mass outside B_{R0 sigma}(x) (both intersected
// with the domain ball).  Found by bisection to 1e-10 relative tolerance.
double sigma_x(const LocalizedDensity& f, const SurfacePoint& x,
               const ConstantsConfig& config);

// Balance scales and concentration statistics over the candidate grid
// (mesh vertices inside the domain ball, plus the center).
struct ScaleField {
  std::vector<SurfacePoint> points;  // candidate grid; entry 0 is the center
  std::vector<double> quad;          // quadrature weight per candidate
  std::vector<double> sigma;         // sigma(x, f) per candidate
  std::vector<double> t_stat;        // T(x, f) per candidate
  double sigma_f = 0.0;              // 3 * min sigma
  double max_t = 0.0;
  int argmax = -1;
  std::vector<int> s_set;  // candidates with T > tau and sigma < sigma_f
};
ScaleField t_and_s(const LocalizedDensity& f, const ConstantsConfig& config);

// Center of mass weighted by (T - tau)^+ (sigma_f - sigma)^+, radially
// projected to the sphere, paired with the scale sigma_f.  Requires
// sigma_f <= delta_co; raises DomainError otherwise or when the weight
// function vanishes on the whole grid.
ConcentrationDescriptor psi_map(const LocalizedDensity& f,
                                const ConstantsConfig& config);

// Per-site descriptor of a density concentrated near l separated sites.
struct LocalScale {
  SurfacePoint site;
  double site_radius = 0.0;  // localization radius used around the site
  ConcentrationDescriptor desc;
};

// Available when the density is within 2 eps(l) of the l-atom stratum but
// farther than eps(l-1) from the (l-1)-atom stratum (no lower condition
// for l = 1); returns one descriptor per separated site, or nullopt.
std::optional<std::vector<LocalScale>> local_scales(
    const Density& f, int l, const ConstantsConfig& config);
std::optional<std::vector<LocalScale>> local_scales(
    const SphereMesh& mesh, const Eigen::VectorXd& u, int l,
    const ConstantsConfig& config);

struct GlobalScales {
  double sigma1 = 1.0;  // blended global scale of the first density
  double sigma2 = 1.0;  // blended global scale of the second density
  double s = 0.5;       // join parameter F_M(sigma1 / sigma2)
};

// The three-step blend: an averaged per-level scale recursion for the
// first density, an interpolation toward the site nearest the second
// density's center, and diffuse-limit cutoffs sending each scale to 1.
GlobalScales global_scales(const Density& f1, const Density& f2, int k,
                           const ConstantsConfig& config);
GlobalScales global_scales(const SphereMesh& mesh, const Eigen::VectorXd& u1,
                           const Eigen::VectorXd& u2, int k,
                           const ConstantsConfig& config);

// The monotone ramp behind the join parameter: 0 below 1/M, t/(1+t) on
// [2/M, M], 1 above 2M, linear in the gaps.
double join_ramp(double t, double M);

// Refined projection of a pair of densities into a join element.  The
// atomic part interpolates between the k-atom projection's sites and the
// per-site centers of mass according to the distance to the (k-1)-atom
// stratum; the point part is the second density's center of mass; the
// join parameter comes from global_scales, forced to an endpoint when one
// side's projection is unavailable.  Raises DomainError when neither side
// is close to its stratum.
JoinElement refined_projection(const Density& f1, const Density& f2, int k,
                               const ConstantsConfig& config);
JoinElement refined_projection(const SphereMesh& mesh,
                               const Eigen::VectorXd& u1,
                               const Eigen::VectorXd& u2, int k,
                               const ConstantsConfig& config);

// Deterministic corpus of localized densities exercising the scale maps:
// peaks across several decades of sharpness, uniform discs, two-site
// mixtures, off-center peaks, and peak-plus-floor blends.
std::vector<LocalizedDensity> concentration_corpus(
    const ConstantsConfig& config);

}  // namespace toda
