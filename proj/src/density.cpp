// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0

#include "todasphere/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "todasphere/fields.hpp"

namespace toda {

namespace {

// Area of B_rho(c) intersected with B_R(z), via the circle-fraction
// integral about c.  Falls back to closed forms when one ball swallows
// the other.
double lens_area(const SurfacePoint& c, double rho, const SurfacePoint& z,
                 double R) {
  const double d = geodesic_distance(c, z);
  if (d + rho <= R) return cap_area(rho);
  if (d + R <= rho) return cap_area(R);
  if (d >= rho + R) return 0.0;
  const double lo = std::abs(d - R);
  const auto& gl = gauss_legendre(16);
  double acc = (d <= R) ? cap_area(std::min(rho, R - d)) : 0.0;
  const double a0 = std::min(lo, rho), a1 = std::min(d + R, rho);
  const int panels = 8;
  for (int p = 0; p < panels; ++p) {
    const double a = a0 + (a1 - a0) * p / panels;
    const double b = a0 + (a1 - a0) * (p + 1) / panels;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (const auto& [x, w] : gl) {
      const double t = mid + half * x;
      acc += w * half * circle_ball_fraction(t, d, R) * ring_length(t);
    }
  }
  return acc;
}

// Stieltjes mass of a radial core inside B_r(c).
double core_mass_in_ball(const Density::Core& core, const SurfacePoint& c,
                         double r) {
  if (r <= 0.0) return 0.0;
  const double d = geodesic_distance(core.center, c);
  if (d + core.cdf.support_radius() <= r) return core.mass;
  double acc = 0.0;
  const double lo = std::abs(d - r);
  if (d <= r) acc += core.cdf.value(r - d);  // circles fully inside

  // Partial zone: refine uniformly across (lo, d + r), then walk the rest
  // of the support to catch wrap-around inclusion near the far pole.
  std::set<double> pts;
  const double hi = std::min(d + r, kHalfCircumference);
  for (int k = 0; k <= 96; ++k) pts.insert(lo + (hi - lo) * k / 96.0);
  const double support = std::min(core.cdf.support_radius(), kHalfCircumference);
  if (support > hi) {
    for (int k = 0; k <= 16; ++k) pts.insert(hi + (support - hi) * k / 16.0);
  }
  double prev = *pts.begin();
  double c_prev = core.cdf.value(prev);
  for (auto it = std::next(pts.begin()); it != pts.end(); ++it) {
    const double t = *it;
    const double c_t = core.cdf.value(t);
    const double frac = circle_ball_fraction(0.5 * (prev + t), d, r);
    acc += frac * (c_t - c_prev);
    prev = t;
    c_prev = c_t;
  }
  return core.mass * acc;
}

}  // namespace

Density Density::from_log_field(const SphereMesh& mesh,
                                const Eigen::VectorXd& u) {
  const Eigen::VectorXd f = normalized_density(mesh, u);
  return from_vertex_density(mesh, f);
}

Density Density::from_vertex_density(const SphereMesh& mesh,
                                     const Eigen::VectorXd& f) {
  if (f.size() != mesh.vertex_count()) {
    throw ConfigError("density field length does not match mesh");
  }
  if (f.minCoeff() < 0.0) throw ConfigError("density must be nonnegative");
  Density d;
  d.set_background(&mesh, mesh.quad_weights().cwiseProduct(f));
  return d;
}

Density Density::single_peak(double lam, const SurfacePoint& z) {
  if (!(lam >= 1.0)) throw ConfigError("peak sharpness must be >= 1");
  auto pdf = [lam](double t) {
    return std::exp(bubble_log_profile(lam, t)) * ring_length(t);
  };
  Core core;
  core.center = z;
  core.cdf = TabulatedCDF::build(
      pdf, {0.1 / lam, 1.0 / lam, 10.0 / lam, 100.0 / lam},
      kHalfCircumference);
  core.mass = 1.0;
  Density d;
  d.add_core(std::move(core));
  return d;
}

void Density::add_core(Core core) {
  if (core.cdf.support_radius() <= 0.0) {
    throw ConfigError("core needs a tabulated radial distribution");
  }
  cores_.push_back(std::move(core));
}

void Density::add_uniform(UniformPatch patch) {
  if (!(patch.radius > 0.0)) throw ConfigError("patch radius must be positive");
  patch.radius = std::min(patch.radius, kHalfCircumference);
  patches_.push_back(patch);
}

void Density::set_background(const SphereMesh* mesh,
                             Eigen::VectorXd vertex_masses) {
  if (mesh == nullptr) {
    mesh_ = nullptr;
    background_.resize(0);
    return;
  }
  if (vertex_masses.size() != mesh->vertex_count()) {
    throw ConfigError("background length does not match mesh");
  }
  mesh_ = mesh;
  background_ = std::move(vertex_masses);
}

double Density::total_mass() const {
  double acc = 0.0;
  for (const auto& c : cores_) acc += c.mass;
  for (const auto& p : patches_) acc += p.mass;
  if (mesh_ != nullptr) acc += background_.sum();
  return acc;
}

Density Density::normalized() const {
  const double total = total_mass();
  if (!(total > 0.0)) throw NumericError("cannot normalize a null measure");
  Density out = *this;
  for (auto& c : out.cores_) c.mass /= total;
  for (auto& p : out.patches_) p.mass /= total;
  if (out.mesh_ != nullptr) out.background_ /= total;
  return out;
}

double Density::mass_in_ball(const SurfacePoint& c, double r) const {
  if (r <= 0.0) return 0.0;
  if (r >= kHalfCircumference) return total_mass();
  double acc = 0.0;
  for (const auto& core : cores_) acc += core_mass_in_ball(core, c, r);
  for (const auto& p : patches_) {
    const double full = cap_area(p.radius);
    acc += p.mass * lens_area(c, r, p.center, p.radius) / full;
  }
  if (mesh_ != nullptr) {
    for (int i : mesh_->vertices_in_ball(c, r)) acc += background_[i];
  }
  return acc;
}

double Density::mass_in_annulus(const SurfacePoint& c, double r_in,
                                double r_out) const {
  return mass_in_ball(c, r_out) - mass_in_ball(c, r_in);
}

Density Density::restricted(const SurfacePoint& x0, double r) const {
  Density out;
  for (const auto& core : cores_) {
    if (geodesic_distance(core.center, x0) < r) out.cores_.push_back(core);
  }
  for (const auto& p : patches_) {
    if (p.radius >= kHalfCircumference) {
      UniformPatch clipped;
      clipped.center = x0;
      clipped.radius = r;
      clipped.mass = p.mass * cap_area(r);
      out.patches_.push_back(clipped);
      continue;
    }
    const double d = geodesic_distance(p.center, x0);
    if (d + p.radius <= r) {
      out.patches_.push_back(p);  // fully inside
    } else if (d < r + p.radius) {
      throw ConfigError("cannot restrict a partially overlapping patch");
    }
  }
  if (mesh_ != nullptr) {
    Eigen::VectorXd masses = Eigen::VectorXd::Zero(mesh_->vertex_count());
    for (int i : mesh_->vertices_in_ball(x0, r)) masses[i] = background_[i];
    out.set_background(mesh_, std::move(masses));
  }
  return out.normalized();
}

std::vector<std::pair<SurfacePoint, double>> Density::to_cloud(
    int coarse_level) const {
  std::vector<std::pair<SurfacePoint, double>> pos, neg;
  for (const auto& c : cores_) {
    (c.mass >= 0.0 ? pos : neg).emplace_back(c.center, c.mass);
  }
  if (!patches_.empty()) {
    static std::map<int, SphereMesh> coarse_cache;
    auto it = coarse_cache.find(coarse_level);
    if (it == coarse_cache.end()) {
      it = coarse_cache
               .emplace(coarse_level, SphereMesh::build_icosphere(coarse_level))
               .first;
    }
    const SphereMesh& coarse = it->second;
    for (const auto& p : patches_) {
      std::vector<int> inside = coarse.vertices_in_ball(p.center, p.radius);
      if (inside.empty()) {
        pos.emplace_back(p.center, p.mass);
        continue;
      }
      double w_total = 0.0;
      for (int i : inside) w_total += coarse.quad_weights()[i];
      for (int i : inside) {
        pos.emplace_back(coarse.vertex(i),
                         p.mass * coarse.quad_weights()[i] / w_total);
      }
    }
  }
  if (mesh_ != nullptr) {
    for (int i = 0; i < mesh_->vertex_count(); ++i) {
      if (background_[i] > 0.0) pos.emplace_back(mesh_->vertex(i), background_[i]);
    }
  }
  // Fold dips into their surroundings.
  for (auto& [x, m] : neg) {
    double remaining = -m;
    while (remaining > 1e-15) {
      size_t best = pos.size();
      double best_d = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < pos.size(); ++i) {
        if (pos[i].second <= 0.0) continue;
        const double d = geodesic_distance(pos[i].first, x);
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      if (best == pos.size()) break;  // nothing left to cancel against
      const double take = std::min(remaining, pos[best].second);
      pos[best].second -= take;
      remaining -= take;
    }
  }
  std::vector<std::pair<SurfacePoint, double>> cloud;
  for (const auto& a : pos) {
    if (a.second > 1e-15) cloud.push_back(a);
  }
  return cloud;
}

}  // namespace toda
