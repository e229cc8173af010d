// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0
//
// Discrete model of the unit-area round sphere: icosphere triangulation,
// spherical quadrature weights, cotangent Laplacian, and analytic
// geodesic/exponential maps (great circles, no graph approximation).
#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <array>
#include <string>
#include <vector>

#include "todasphere/common.hpp"

namespace toda {

// A point constrained to the sphere of radius kSphereRadius.
struct SurfacePoint {
  Vec3 v = Vec3(0, 0, kSphereRadius);

  SurfacePoint() = default;
  explicit SurfacePoint(const Vec3& ambient);  // validates |ambient| ~ r0

  // Normalizes an arbitrary nonzero ambient vector onto the sphere.
  static SurfacePoint on_sphere(const Vec3& direction);

  double x() const { return v.x(); }
  double y() const { return v.y(); }
  double z() const { return v.z(); }
};

// Great-circle distance (arc length) between two surface points.
double geodesic_distance(const SurfacePoint& a, const SurfacePoint& b);

// Geodesic from p with initial tangent velocity w, evaluated at time 1;
// |w| is the traveled arc length.  w must be tangent at p.
SurfacePoint exp_map(const SurfacePoint& p, const Vec3& w);

// Inverse of exp_map: tangent vector at p pointing to q with |log| = d(p,q).
// At the antipode the direction is ambiguous; a fixed orthogonal direction
// is chosen deterministically.
Vec3 log_map(const SurfacePoint& p, const SurfacePoint& q);

// Point at parameter t in [0,1] along the minimal geodesic from a to b.
SurfacePoint geodesic_point(const SurfacePoint& a, const SurfacePoint& b,
                            double t);

// Orthonormal tangent basis at p (deterministic).
std::array<Vec3, 2> tangent_basis(const SurfacePoint& p);

class SphereMesh {
 public:
  // Icosphere with 10*4^level + 2 vertices; level in [0, 8].
  // Consults the directory named by the TODASPHERE_CACHE environment
  // variable for a previously exported mesh before rebuilding.
  static SphereMesh build_icosphere(int level);

  // Plain-text serialization with a versioned header.
  void save(const std::string& path) const;
  static SphereMesh load(const std::string& path);

  int level() const { return level_; }
  int vertex_count() const { return static_cast<int>(vertices_.size()); }
  int face_count() const { return static_cast<int>(faces_.size()); }
  const std::vector<SurfacePoint>& vertices() const { return vertices_; }
  const SurfacePoint& vertex(int i) const { return vertices_[i]; }
  const std::vector<std::array<int, 3>>& faces() const { return faces_; }
  const Eigen::VectorXd& quad_weights() const { return quad_weights_; }
  const Eigen::SparseMatrix<double>& laplacian() const { return laplacian_; }

  // Quadrature: sum_i w_i f_i; exact for constants (weights sum to 1).
  double integrate(const Eigen::VectorXd& f) const;

  // Dirichlet energy f^T L f (nonnegative; 0 iff constant).
  double dirichlet_energy(const Eigen::VectorXd& f) const;

  // Bilinear form f^T L g = integral of grad f . grad g.
  double gradient_inner(const Eigen::VectorXd& f,
                        const Eigen::VectorXd& g) const;

  // Indices of vertices within geodesic distance r of c.
  std::vector<int> vertices_in_ball(const SurfacePoint& c, double r) const;

  int nearest_vertex(const SurfacePoint& p) const;

  // Representative resolution: the maximum edge length.
  double spacing() const { return spacing_; }

 private:
  SphereMesh() = default;
  void finalize();  // weights + Laplacian from vertices/faces

  int level_ = -1;
  std::vector<SurfacePoint> vertices_;
  std::vector<std::array<int, 3>> faces_;
  Eigen::VectorXd quad_weights_;
  Eigen::SparseMatrix<double> laplacian_;
  double spacing_ = 0.0;
};

}  // namespace toda
