// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0

#include "todasphere/mesh.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "todasphere/constants.hpp"

namespace toda {

namespace {

constexpr double kOnSphereTol = 1e-9;

// Spherical (solid-angle) area of the geodesic triangle abc on the
// radius-r0 sphere, via Van Oosterom & Strackee's formula.  Using true
// spherical areas makes the quadrature weights sum to the sphere area
// exactly, i.e. to 1.
double spherical_triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 u = a / kSphereRadius, v = b / kSphereRadius,
             w = c / kSphereRadius;
  const double num = u.dot(v.cross(w));
  const double den = 1.0 + u.dot(v) + v.dot(w) + w.dot(u);
  const double omega = 2.0 * std::atan2(std::abs(num), den);
  return omega * kSphereRadius * kSphereRadius;
}

}  // namespace

SurfacePoint::SurfacePoint(const Vec3& ambient) : v(ambient) {
  if (std::abs(v.norm() - kSphereRadius) > kOnSphereTol) {
    throw DomainError("point does not lie on the sphere");
  }
  v *= kSphereRadius / v.norm();
}

SurfacePoint SurfacePoint::on_sphere(const Vec3& direction) {
  const double n = direction.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw DomainError("cannot project zero/non-finite vector to the sphere");
  }
  SurfacePoint p;
  p.v = direction * (kSphereRadius / n);
  return p;
}

double geodesic_distance(const SurfacePoint& a, const SurfacePoint& b) {
  const Vec3 u = a.v / kSphereRadius, w = b.v / kSphereRadius;
  // atan2 form is accurate for both small and near-antipodal angles.
  const double angle = std::atan2(u.cross(w).norm(), u.dot(w));
  return kSphereRadius * angle;
}

SurfacePoint exp_map(const SurfacePoint& p, const Vec3& w) {
  const double len = w.norm();
  if (len == 0.0) return p;
  const double tangency = std::abs(w.dot(p.v)) / (len * kSphereRadius);
  if (tangency > 1e-8) {
    throw DomainError("exp_map velocity is not tangent to the sphere");
  }
  const double theta = len / kSphereRadius;
  const Vec3 dir = w / len;
  return SurfacePoint::on_sphere(std::cos(theta) * p.v +
                                 std::sin(theta) * kSphereRadius * dir);
}

std::array<Vec3, 2> tangent_basis(const SurfacePoint& p) {
  const Vec3 n = p.v.normalized();
  Vec3 ref = std::abs(n.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
  const Vec3 e1 = (ref - ref.dot(n) * n).normalized();
  const Vec3 e2 = n.cross(e1);
  return {e1, e2};
}

Vec3 log_map(const SurfacePoint& p, const SurfacePoint& q) {
  const double d = geodesic_distance(p, q);
  if (d == 0.0) return Vec3::Zero();
  const Vec3 n = p.v.normalized();
  Vec3 perp = q.v - q.v.dot(n) * n;
  const double pn = perp.norm();
  if (pn < 1e-14 * kSphereRadius) {
    // Antipodal: pick a fixed tangent direction.
    return d * tangent_basis(p)[0];
  }
  return d * (perp / pn);
}

SurfacePoint geodesic_point(const SurfacePoint& a, const SurfacePoint& b,
                            double t) {
  if (t <= 0.0) return a;
  if (t >= 1.0) return b;
  const Vec3 w = log_map(a, b);
  return exp_map(a, t * w);
}

// ---------------------------------------------------------------------------
// Icosphere construction
// ---------------------------------------------------------------------------

SphereMesh SphereMesh::build_icosphere(int level) {
  if (level < 0 || level > 8) {
    throw ConfigError("icosphere level must be in [0, 8]");
  }

  // Cache lookup (best effort; any failure falls through to a rebuild).
  const char* cache_dir = std::getenv("TODASPHERE_CACHE");
  std::string cache_path;
  if (cache_dir != nullptr && *cache_dir != '\0') {
    cache_path = std::string(cache_dir) + "/icosphere_level" +
                 std::to_string(level) + ".mesh";
    try {
      if (std::filesystem::exists(cache_path)) {
        SphereMesh cached = SphereMesh::load(cache_path);
        if (cached.level_ == level) return cached;
      }
    } catch (...) {
    }
  }

  SphereMesh mesh;
  mesh.level_ = level;

  // Icosahedron seeded from the golden rectangle construction.
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const std::array<Vec3, 12> base = {{{-1, phi, 0},
                                      {1, phi, 0},
                                      {-1, -phi, 0},
                                      {1, -phi, 0},
                                      {0, -1, phi},
                                      {0, 1, phi},
                                      {0, -1, -phi},
                                      {0, 1, -phi},
                                      {phi, 0, -1},
                                      {phi, 0, 1},
                                      {-phi, 0, -1},
                                      {-phi, 0, 1}}};
  for (const Vec3& b : base) {
    mesh.vertices_.push_back(SurfacePoint::on_sphere(b));
  }
  mesh.faces_ = {{0, 11, 5},  {0, 5, 1},   {0, 1, 7},   {0, 7, 10},
                 {0, 10, 11}, {1, 5, 9},   {5, 11, 4},  {11, 10, 2},
                 {10, 7, 6},  {7, 1, 8},   {3, 9, 4},   {3, 4, 2},
                 {3, 2, 6},   {3, 6, 8},   {3, 8, 9},   {4, 9, 5},
                 {2, 4, 11},  {6, 2, 10},  {8, 6, 7},   {9, 8, 1}};

  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int i, int j) {
      const auto key = std::minmax(i, j);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const Vec3 m = mesh.vertices_[i].v + mesh.vertices_[j].v;
      mesh.vertices_.push_back(SurfacePoint::on_sphere(m));
      const int idx = static_cast<int>(mesh.vertices_.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(mesh.faces_.size() * 4);
    for (const auto& f : mesh.faces_) {
      const int a = mid(f[0], f[1]);
      const int b = mid(f[1], f[2]);
      const int c = mid(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    mesh.faces_ = std::move(next);
  }

  mesh.finalize();

  if (!cache_path.empty()) {
    try {
      mesh.save(cache_path);
    } catch (...) {
    }
  }
  return mesh;
}

void SphereMesh::finalize() {
  const int n = vertex_count();
  quad_weights_ = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(faces_.size() * 12);
  spacing_ = 0.0;

  for (const auto& f : faces_) {
    const Vec3& a = vertices_[f[0]].v;
    const Vec3& b = vertices_[f[1]].v;
    const Vec3& c = vertices_[f[2]].v;

    // Lumped (barycentric) mass from the spherical triangle area.
    const double area = spherical_triangle_area(a, b, c) / 3.0;
    for (int k = 0; k < 3; ++k) quad_weights_[f[k]] += area;

    // Cotangent stiffness from the flat triangle embedded in R^3.
    const std::array<Vec3, 3> p = {a, b, c};
    for (int k = 0; k < 3; ++k) {
      const Vec3& pk = p[k];
      const Vec3& pi = p[(k + 1) % 3];
      const Vec3& pj = p[(k + 2) % 3];
      const Vec3 e1 = pi - pk, e2 = pj - pk;
      const double cot = e1.dot(e2) / e1.cross(e2).norm();
      const double w = 0.5 * cot;
      const int i = f[(k + 1) % 3], j = f[(k + 2) % 3];
      trips.emplace_back(i, j, -w);
      trips.emplace_back(j, i, -w);
      trips.emplace_back(i, i, w);
      trips.emplace_back(j, j, w);

      spacing_ = std::max(spacing_, geodesic_distance(vertices_[i],
                                                      vertices_[j]));
    }
  }

  laplacian_.resize(n, n);
  laplacian_.setFromTriplets(trips.begin(), trips.end());
  laplacian_.makeCompressed();
}

double SphereMesh::integrate(const Eigen::VectorXd& f) const {
  if (f.size() != quad_weights_.size()) {
    throw ConfigError("field length does not match vertex count");
  }
  return quad_weights_.dot(f);
}

double SphereMesh::dirichlet_energy(const Eigen::VectorXd& f) const {
  return gradient_inner(f, f);
}

double SphereMesh::gradient_inner(const Eigen::VectorXd& f,
                                  const Eigen::VectorXd& g) const {
  if (f.size() != quad_weights_.size() || g.size() != quad_weights_.size()) {
    throw ConfigError("field length does not match vertex count");
  }
  return f.dot(laplacian_ * g);
}

std::vector<int> SphereMesh::vertices_in_ball(const SurfacePoint& c,
                                              double r) const {
  std::vector<int> out;
  // d(c, x) <= r  <=>  angle <= r/r0  <=>  dot >= r0^2 cos(r/r0).
  if (r >= kHalfCircumference) {
    out.resize(vertex_count());
    for (int i = 0; i < vertex_count(); ++i) out[i] = i;
    return out;
  }
  const double threshold =
      kSphereRadius * kSphereRadius * std::cos(r / kSphereRadius);
  for (int i = 0; i < vertex_count(); ++i) {
    if (vertices_[i].v.dot(c.v) >= threshold) out.push_back(i);
  }
  return out;
}

int SphereMesh::nearest_vertex(const SurfacePoint& p) const {
  int best = 0;
  double best_dot = -1e300;
  for (int i = 0; i < vertex_count(); ++i) {
    const double d = vertices_[i].v.dot(p.v);
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void SphereMesh::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw NumericError("cannot open mesh file for writing: " + path);
  out.precision(17);
  out << "todasphere-mesh 1\n";
  out << level_ << ' ' << vertex_count() << ' ' << face_count() << '\n';
  for (const auto& v : vertices_) {
    out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  for (const auto& f : faces_) {
    out << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  }
  for (int i = 0; i < vertex_count(); ++i) {
    out << quad_weights_[i] << (i + 1 == vertex_count() ? '\n' : ' ');
  }
  if (!out) throw NumericError("failed writing mesh file: " + path);
}

SphereMesh SphereMesh::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mesh file: " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "todasphere-mesh" || version != 1) {
    throw ConfigError("unrecognized mesh file header in " + path);
  }
  SphereMesh mesh;
  int nv = 0, nf = 0;
  in >> mesh.level_ >> nv >> nf;
  if (!in || nv < 4 || nf < 4) throw ConfigError("corrupt mesh file: " + path);
  mesh.vertices_.reserve(nv);
  for (int i = 0; i < nv; ++i) {
    Vec3 v;
    in >> v.x() >> v.y() >> v.z();
    mesh.vertices_.push_back(SurfacePoint::on_sphere(v));
  }
  mesh.faces_.resize(nf);
  for (auto& f : mesh.faces_) in >> f[0] >> f[1] >> f[2];
  if (!in) throw ConfigError("corrupt mesh file: " + path);
  mesh.finalize();
  // Stored weights are informational; verify they match the recomputed
  // quadrature to guard against stale caches.
  Eigen::VectorXd stored(nv);
  for (int i = 0; i < nv; ++i) in >> stored[i];
  if (in && (stored - mesh.quad_weights_).lpNorm<Eigen::Infinity>() > 1e-9) {
    throw ConfigError("mesh file weights disagree with geometry: " + path);
  }
  return mesh;
}

// ---------------------------------------------------------------------------
// ConstantsConfig
// ---------------------------------------------------------------------------

void ConstantsConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("constants: " + msg);
  };
  require(eps1 > 0 && eps_ratio > 0 && eps_ratio <= 0.5,
          "eps ladder must decay by at least a factor 2 per rung");
  require(eps_prime_factor > 0 && eps_prime_factor <= 0.5,
          "eps_prime must sit well below eps");
  require(delta > 0 && delta2 > 0 && delta1 > 0 && delta3 > 0,
          "separation thresholds must be positive");
  require(delta2 <= delta / 10.0, "delta2 must sit well below delta");
  require(delta1 <= delta2 / 16.0, "delta1 must be at most delta2/16");
  require(delta_bar > 0, "delta_bar must be positive");
  require(R > 1.0, "concentration ratio R must exceed 1");
  require(std::abs(R0 - 3.0 * R) < 1e-12, "R0 must equal 3R");
  require(tau1 >= 1.0, "tau1 must be at least 1");
  require(tau_bar >= 4.0 / delta1,
          "tau_bar must satisfy 4/tau_bar <= delta1");
  require(M > 1.0, "join threshold M must exceed 1");
  require(ramp_cap > 1.0, "ramp cap must exceed 1");
  require(tau_universal > 0 && tau_universal < 1,
          "tau_universal must lie in (0,1)");
  require(delta_co > 0, "delta_co must be positive");
  require(mu_exponent > 1.0 && tau_tilde_exponent > mu_exponent,
          "parameter ladder must satisfy tau_tilde >> mu >> lambda");
  require(mesh_level >= 0 && mesh_level <= 8, "mesh level must be in [0,8]");
}

ConstantsConfig parse_constants(const std::map<std::string, std::string>& kv,
                                ConstantsConfig base) {
  auto to_double = [](const std::string& key, const std::string& s) {
    try {
      size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("constants: cannot parse value for '" + key +
                        "': " + s);
    }
  };
  for (const auto& [key, value] : kv) {
    if (key == "eps1") base.eps1 = to_double(key, value);
    else if (key == "eps_ratio") base.eps_ratio = to_double(key, value);
    else if (key == "eps_prime_factor")
      base.eps_prime_factor = to_double(key, value);
    else if (key == "delta") base.delta = to_double(key, value);
    else if (key == "delta2") base.delta2 = to_double(key, value);
    else if (key == "delta1") base.delta1 = to_double(key, value);
    else if (key == "delta3") base.delta3 = to_double(key, value);
    else if (key == "delta_bar") base.delta_bar = to_double(key, value);
    else if (key == "R") {
      base.R = to_double(key, value);
      base.R0 = 3.0 * base.R;
    } else if (key == "tau1") base.tau1 = to_double(key, value);
    else if (key == "tau_bar") base.tau_bar = to_double(key, value);
    else if (key == "M") base.M = to_double(key, value);
    else if (key == "ramp_cap") base.ramp_cap = to_double(key, value);
    else if (key == "tau_universal")
      base.tau_universal = to_double(key, value);
    else if (key == "delta_co") base.delta_co = to_double(key, value);
    else if (key == "mu_exponent") base.mu_exponent = to_double(key, value);
    else if (key == "tau_tilde_exponent")
      base.tau_tilde_exponent = to_double(key, value);
    else if (key == "mesh_level")
      base.mesh_level = static_cast<int>(to_double(key, value));
    else throw ConfigError("constants: unknown key '" + key + "'");
  }
  base.validate();
  return base;
}

}  // namespace toda
