// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0

#include "todasphere/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "todasphere/radial.hpp"

namespace toda {

double Scheme::integrate(
    const std::function<double(const SurfacePoint&)>& f) const {
  double acc = 0.0;
  for (const auto& n : nodes) acc += n.w * f(n.x);
  return acc;
}

double Scheme::log_integrate_exp(
    const std::function<double(const SurfacePoint&)>& log_f) const {
  if (nodes.empty()) throw ConfigError("empty quadrature scheme");
  std::vector<double> vals(nodes.size());
  double m = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < nodes.size(); ++i) {
    vals[i] = log_f(nodes[i].x);
    m = std::max(m, vals[i]);
  }
  if (!std::isfinite(m)) throw NumericError("integrand log-values not finite");
  double acc = 0.0;
  for (size_t i = 0; i < nodes.size(); ++i) {
    acc += nodes[i].w * std::exp(vals[i] - m);
  }
  if (!(acc > 0.0)) throw NumericError("exponential integral vanished");
  return m + std::log(acc);
}

Scheme build_scheme(const SphereMesh* far_mesh, std::vector<Cap> caps,
                    int angular_nodes, int points_per_panel,
                    double panels_per_decade) {
  if (far_mesh == nullptr && caps.empty()) {
    throw ConfigError("scheme needs a mesh or at least one cap");
  }
  if (angular_nodes < 4 || points_per_panel < 2) {
    throw ConfigError("scheme resolution parameters too small");
  }
  for (auto& c : caps) {
    if (!(c.radius > 0.0)) throw ConfigError("cap radius must be positive");
    c.radius = std::min(c.radius, kHalfCircumference);
  }
  // Smaller caps take precedence in overlaps (they resolve the finer
  // features); stable to keep ties deterministic.
  std::stable_sort(caps.begin(), caps.end(),
                   [](const Cap& a, const Cap& b) { return a.radius < b.radius; });

  Scheme scheme;
  const double two_pi = 2.0 * std::numbers::pi;
  for (size_t k = 0; k < caps.size(); ++k) {
    const Cap& cap = caps[k];
    const auto bounds =
        panel_boundaries(cap.scales, cap.radius, panels_per_decade);
    const auto& gl = gauss_legendre(points_per_panel);
    const auto basis = tangent_basis(cap.center);
    for (size_t p = 0; p + 1 < bounds.size(); ++p) {
      const double mid = 0.5 * (bounds[p] + bounds[p + 1]);
      const double half = 0.5 * (bounds[p + 1] - bounds[p]);
      for (const auto& [xg, wg] : gl) {
        const double rho = mid + half * xg;
        const double ring_w = wg * half * ring_length(rho) / angular_nodes;
        for (int j = 0; j < angular_nodes; ++j) {
          const double theta = two_pi * (j + 0.5) / angular_nodes;
          const Vec3 dir = std::cos(theta) * basis[0] + std::sin(theta) * basis[1];
          const SurfacePoint x = exp_map(cap.center, rho * dir);
          bool owned = true;
          for (size_t i = 0; i < k; ++i) {
            if (geodesic_distance(x, caps[i].center) < caps[i].radius) {
              owned = false;
              break;
            }
          }
          if (owned) scheme.nodes.push_back({x, ring_w});
        }
      }
    }
  }

  if (far_mesh != nullptr) {
    for (int i = 0; i < far_mesh->vertex_count(); ++i) {
      const SurfacePoint& v = far_mesh->vertex(i);
      bool outside = true;
      for (const Cap& cap : caps) {
        if (geodesic_distance(v, cap.center) < cap.radius) {
          outside = false;
          break;
        }
      }
      if (outside) scheme.nodes.push_back({v, far_mesh->quad_weights()[i]});
    }
  }
  if (scheme.nodes.empty()) throw ConfigError("scheme has no nodes");
  return scheme;
}

}  // namespace toda
