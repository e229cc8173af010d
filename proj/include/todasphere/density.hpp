// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0
//
// Measures on the sphere decomposed into components whose ball masses are
// computable at any scale: radially symmetric cores (signed, so
// multiplicative dips can be folded in), uniform patches over caps, and a
// per-vertex background on a mesh.  Concentration scales of peaked
// densities live far below mesh resolution; this decomposition keeps those
// queries accurate while generic fields degrade gracefully to the mesh.
#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "todasphere/mesh.hpp"
#include "todasphere/radial.hpp"

namespace toda {

class Density {
 public:
  // Radially symmetric component about a center; cdf is the normalized
  // cumulative mass in the geodesic radius.  mass may be negative for
  // dips carved out of smoother components.
  struct Core {
    SurfacePoint center;
    double mass = 0.0;
    TabulatedCDF cdf;
  };

  // Uniform measure over the cap B_radius(center); radius defaults to the
  // whole sphere.
  struct UniformPatch {
    SurfacePoint center;
    double radius = kHalfCircumference;
    double mass = 0.0;
  };

  Density() = default;

  // Probability density e^u / int e^u sampled on the mesh (background only).
  static Density from_log_field(const SphereMesh& mesh,
                                const Eigen::VectorXd& u);
  // Nonnegative vertex density f (w.r.t. the surface measure).
  static Density from_vertex_density(const SphereMesh& mesh,
                                     const Eigen::VectorXd& f);
  // Normalized sharp peak of scale 1/lam at z (single exact radial core).
  static Density single_peak(double lam, const SurfacePoint& z);

  void add_core(Core core);
  void add_uniform(UniformPatch patch);
  void set_background(const SphereMesh* mesh, Eigen::VectorXd vertex_masses);

  const std::vector<Core>& cores() const { return cores_; }
  const std::vector<UniformPatch>& patches() const { return patches_; }
  const SphereMesh* background_mesh() const { return mesh_; }
  // Per-vertex background masses (quadrature included); empty when no
  // background is attached.
  const Eigen::VectorXd& background_masses() const { return background_; }

  double total_mass() const;
  Density normalized() const;  // scales all components to total mass 1

  // Mass of the measure inside B_r(c) / the annulus r_in <= d < r_out.
  double mass_in_ball(const SurfacePoint& c, double r) const;
  double mass_in_annulus(const SurfacePoint& c, double r_in,
                         double r_out) const;

  // Restriction to B_r(x0): cores kept iff their center lies inside,
  // background rows outside are dropped, whole-sphere patches become
  // cap patches.  Sub-sphere patches must be fully inside or outside.
  // The result is renormalized to unit mass.
  Density restricted(const SurfacePoint& x0, double r) const;

  // Nonnegative weighted point cloud (for transport and medoid searches):
  // cores collapse to their centers, uniform patches spread over the
  // vertices of an icosphere at coarse_level, background keeps vertices.
  // Negative core masses are cancelled against the nearest positive atoms.
  std::vector<std::pair<SurfacePoint, double>> to_cloud(
      int coarse_level = 3) const;

 private:
  std::vector<Core> cores_;
  std::vector<UniformPatch> patches_;
  const SphereMesh* mesh_ = nullptr;
  Eigen::VectorXd background_;  // per-vertex masses (quadrature included)
};

}  // namespace toda
