// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0
//
// Decomposed surface quadrature: geodesic-polar node sets inside caps
// around known feature centers (radial Gauss-Legendre panels refined at
// the caller's feature scales, uniform angular nodes), combined with the
// mesh vertex quadrature as far field.  Overlaps are resolved by letting
// the smaller cap own the shared region, so every surface point is counted
// once.  Integrands are evaluated pointwise, which keeps sub-mesh features
// exact wherever a cap resolves them.
#pragma once

#include <functional>
#include <vector>

#include "todasphere/mesh.hpp"

namespace toda {

// A polar quadrature patch: ball of the given radius around center, with
// radial panels refined at the listed feature scales.
struct Cap {
  SurfacePoint center;
  double radius = 0.0;
  std::vector<double> scales;
};

struct QuadNode {
  SurfacePoint x;
  double w = 0.0;
};

// An assembled node set; integrate arbitrary pointwise integrands over it.
class Scheme {
 public:
  std::vector<QuadNode> nodes;

  double integrate(const std::function<double(const SurfacePoint&)>& f) const;

  // log of int e^{log_f}, max-subtracted across the node set so that
  // integrands spanning hundreds of e-folds stay finite.
  double log_integrate_exp(
      const std::function<double(const SurfacePoint&)>& log_f) const;
};

// Builds the union-of-caps scheme.  far_mesh contributes its vertices
// outside every cap; pass nullptr for a cap-only (local) scheme.
Scheme build_scheme(const SphereMesh* far_mesh, std::vector<Cap> caps,
                    int angular_nodes = 32, int points_per_panel = 8,
                    double panels_per_decade = 2.0);

}  // namespace toda
