// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0

#include "todasphere/fields.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace toda {

namespace {

constexpr double kPi = std::numbers::pi;

// Internal geometry constant of the scaling-invariant improved mode: the
// annulus is A_z(C*sigma, r/C) and sigma must stay below r/C^2.
constexpr double kAnnulusC = 4.0;

void check_field(const SphereMesh& mesh, const Eigen::VectorXd& u,
                 const char* name) {
  if (u.size() != mesh.vertex_count()) {
    throw ConfigError(std::string(name) + ": length does not match mesh");
  }
  if (!u.allFinite()) {
    throw NumericError(std::string(name) + ": non-finite values");
  }
}

}  // namespace

void RhoParams::validate(const SphereMesh& mesh) const {
  if (!(rho1 > 0.0) || !(rho2 > 0.0)) {
    throw ConfigError("rho parameters must be positive");
  }
  for (const auto* h : {&h1, &h2}) {
    if (h->size() == 0) continue;
    check_field(mesh, *h, "weight h");
    if (h->minCoeff() <= 0.0) {
      throw ConfigError("weight h must be strictly positive");
    }
  }
}

double distance_to_critical_set(double rho1, double rho2) {
  auto dist_to_grid = [](double rho) {
    const double step = 4.0 * kPi;
    const double n = std::max(1.0, std::round(rho / step));
    return std::abs(rho - n * step);
  };
  return std::min(dist_to_grid(rho1), dist_to_grid(rho2));
}

double mean_value(const SphereMesh& mesh, const Eigen::VectorXd& u) {
  check_field(mesh, u, "u");
  return mesh.integrate(u);
}

double log_integral_exp(const SphereMesh& mesh, const Eigen::VectorXd& u) {
  check_field(mesh, u, "u");
  const double m = u.maxCoeff();
  const double s = mesh.quad_weights().dot((u.array() - m).exp().matrix());
  if (!std::isfinite(s) || s <= 0.0) {
    throw NumericError("exponential moment is degenerate");
  }
  return m + std::log(s);
}

double log_integral_exp(const SphereMesh& mesh, const Eigen::VectorXd& u,
                        const Eigen::VectorXd& h) {
  if (h.size() == 0) return log_integral_exp(mesh, u);
  check_field(mesh, u, "u");
  check_field(mesh, h, "h");
  const double m = u.maxCoeff();
  const double s = mesh.quad_weights().dot(
      (h.array() * (u.array() - m).exp()).matrix());
  if (!std::isfinite(s) || s <= 0.0) {
    throw NumericError("weighted exponential moment is degenerate");
  }
  return m + std::log(s);
}

Eigen::VectorXd normalized_density(const SphereMesh& mesh,
                                   const Eigen::VectorXd& u) {
  const double log_z = log_integral_exp(mesh, u);
  return (u.array() - log_z).exp().matrix();
}

double q_energy(const SphereMesh& mesh, const FieldPair& pair) {
  check_field(mesh, pair.u1, "u1");
  check_field(mesh, pair.u2, "u2");
  const double d11 = mesh.dirichlet_energy(pair.u1);
  const double d22 = mesh.dirichlet_energy(pair.u2);
  const double d12 = mesh.gradient_inner(pair.u1, pair.u2);
  return (d11 + d22 + d12) / 3.0;
}

double j_rho(const SphereMesh& mesh, const FieldPair& pair,
             const RhoParams& params) {
  params.validate(mesh);
  const double t1 =
      mean_value(mesh, pair.u1) - log_integral_exp(mesh, pair.u1, params.h1);
  const double t2 =
      mean_value(mesh, pair.u2) - log_integral_exp(mesh, pair.u2, params.h2);
  return q_energy(mesh, pair) + params.rho1 * t1 + params.rho2 * t2;
}

double i_rho(const SphereMesh& mesh, const Eigen::VectorXd& u, double rho,
             const Eigen::VectorXd& h) {
  if (!(rho > 0.0)) throw ConfigError("rho must be positive");
  return 0.5 * mesh.dirichlet_energy(u) +
         2.0 * rho * (mean_value(mesh, u) - log_integral_exp(mesh, u, h));
}

double mt_deficit(const SphereMesh& mesh, const Eigen::VectorXd& u) {
  return 0.5 * mesh.dirichlet_energy(u) -
         8.0 * kPi * (log_integral_exp(mesh, u) - mean_value(mesh, u));
}

double jw_deficit(const SphereMesh& mesh, const FieldPair& pair) {
  const double m1 = log_integral_exp(mesh, pair.u1) - mean_value(mesh, pair.u1);
  const double m2 = log_integral_exp(mesh, pair.u2) - mean_value(mesh, pair.u2);
  return q_energy(mesh, pair) - 4.0 * kPi * (m1 + m2);
}

// ---------------------------------------------------------------------------
// Per-face gradients and localized energies
// ---------------------------------------------------------------------------

std::vector<Vec3> face_gradients(const SphereMesh& mesh,
                                 const Eigen::VectorXd& u) {
  check_field(mesh, u, "u");
  std::vector<Vec3> grads(mesh.face_count());
  for (int fi = 0; fi < mesh.face_count(); ++fi) {
    const auto& f = mesh.faces()[fi];
    const Vec3& a = mesh.vertex(f[0]).v;
    const Vec3& b = mesh.vertex(f[1]).v;
    const Vec3& c = mesh.vertex(f[2]).v;
    const Vec3 n = (b - a).cross(c - a);
    const double twice_area = n.norm();
    const Vec3 nn = n / twice_area;
    // grad of the PL interpolant: sum_i u_i * (n x e_i) / (2A) with e_i the
    // edge opposite vertex i, oriented consistently.
    Vec3 g = Vec3::Zero();
    g += u[f[0]] * nn.cross(c - b);
    g += u[f[1]] * nn.cross(a - c);
    g += u[f[2]] * nn.cross(b - a);
    grads[fi] = g / twice_area;
  }
  return grads;
}

namespace {

// Flat area of face fi and whether its centroid lies within B_r(c).
double face_area(const SphereMesh& mesh, int fi) {
  const auto& f = mesh.faces()[fi];
  const Vec3& a = mesh.vertex(f[0]).v;
  const Vec3& b = mesh.vertex(f[1]).v;
  const Vec3& c = mesh.vertex(f[2]).v;
  return 0.5 * (b - a).cross(c - a).norm();
}

bool face_in_ball(const SphereMesh& mesh, int fi, const SurfacePoint& c,
                  double r) {
  const auto& f = mesh.faces()[fi];
  const Vec3 centroid =
      (mesh.vertex(f[0]).v + mesh.vertex(f[1]).v + mesh.vertex(f[2]).v) / 3.0;
  return geodesic_distance(SurfacePoint::on_sphere(centroid), c) < r;
}

}  // namespace

double localized_dirichlet(const SphereMesh& mesh, const Eigen::VectorXd& u,
                           const SurfacePoint& c, double r) {
  const auto grads = face_gradients(mesh, u);
  double acc = 0.0;
  for (int fi = 0; fi < mesh.face_count(); ++fi) {
    if (!face_in_ball(mesh, fi, c, r)) continue;
    acc += face_area(mesh, fi) * grads[fi].squaredNorm();
  }
  return acc;
}

double localized_q(const SphereMesh& mesh, const FieldPair& pair,
                   const SurfacePoint& c, double r) {
  const auto g1 = face_gradients(mesh, pair.u1);
  const auto g2 = face_gradients(mesh, pair.u2);
  double acc = 0.0;
  for (int fi = 0; fi < mesh.face_count(); ++fi) {
    if (!face_in_ball(mesh, fi, c, r)) continue;
    acc += face_area(mesh, fi) *
           (g1[fi].squaredNorm() + g2[fi].squaredNorm() +
            g1[fi].dot(g2[fi])) /
           3.0;
  }
  return acc;
}

double integrate_ball(const SphereMesh& mesh, const Eigen::VectorXd& f,
                      const SurfacePoint& c, double r) {
  check_field(mesh, f, "f");
  double acc = 0.0;
  for (int i : mesh.vertices_in_ball(c, r)) {
    acc += mesh.quad_weights()[i] * f[i];
  }
  return acc;
}

double integrate_annulus(const SphereMesh& mesh, const Eigen::VectorXd& f,
                         const SurfacePoint& c, double r_in, double r_out) {
  check_field(mesh, f, "f");
  double acc = 0.0;
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const double d = geodesic_distance(mesh.vertex(i), c);
    if (d >= r_in && d < r_out) acc += mesh.quad_weights()[i] * f[i];
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Improved deficits
// ---------------------------------------------------------------------------

namespace {

// Greedily picks up to `count` mesh vertices, pairwise at least 1.5*delta
// apart, maximizing density mass in balls of radius delta/4 at each pick.
// Returns the smallest ball mass among the picks (0 if not enough fit).
double greedy_spread_mass(const SphereMesh& mesh, const Eigen::VectorXd& f,
                          int count, double delta) {
  std::vector<int> chosen;
  double worst = std::numeric_limits<double>::infinity();
  for (int pick = 0; pick < count; ++pick) {
    int best = -1;
    double best_mass = -1.0;
    for (int i = 0; i < mesh.vertex_count(); ++i) {
      bool ok = true;
      for (int j : chosen) {
        if (geodesic_distance(mesh.vertex(i), mesh.vertex(j)) <
            1.5 * delta) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      const double m = integrate_ball(mesh, f, mesh.vertex(i), delta / 4.0);
      if (m > best_mass) {
        best_mass = m;
        best = i;
      }
    }
    if (best < 0) return 0.0;
    chosen.push_back(best);
    worst = std::min(worst, best_mass);
  }
  return worst;
}

ImprovedDeficit macroscopic_deficit(const SphereMesh& mesh,
                                    const FieldPair& pair,
                                    const MacroscopicMode& mode, double eps) {
  if (mode.k < 0 || mode.l < 0 || !(mode.delta > 0) || !(mode.theta > 0)) {
    throw ConfigError("macroscopic mode parameters must be positive");
  }
  const Eigen::VectorXd f1 = normalized_density(mesh, pair.u1);
  const Eigen::VectorXd f2 = normalized_density(mesh, pair.u2);
  const double worst1 = greedy_spread_mass(mesh, f1, mode.k + 1, mode.delta);
  const double worst2 = greedy_spread_mass(mesh, f2, mode.l + 1, mode.delta);

  ImprovedDeficit out;
  out.hypotheses_met = worst1 >= mode.theta && worst2 >= mode.theta;
  const double m1 = log_integral_exp(mesh, pair.u1) - mean_value(mesh, pair.u1);
  const double m2 = log_integral_exp(mesh, pair.u2) - mean_value(mesh, pair.u2);
  out.deficit = (1.0 + eps) * q_energy(mesh, pair) -
                4.0 * kPi * (mode.k + 1) * m1 - 4.0 * kPi * (mode.l + 1) * m2;
  return out;
}

ImprovedDeficit scaling_invariant_deficit(const SphereMesh& mesh,
                                          const FieldPair& pair,
                                          const ScalingInvariantMode& mode,
                                          double eps) {
  const double C = kAnnulusC;
  if (!(mode.sigma > 0) || !(mode.r > 0) ||
      !(mode.sigma < mode.r / (C * C))) {
    throw ConfigError(
        "scaling-invariant mode requires 0 < sigma < r/C^2");
  }
  if (!(mode.tau0 > 0) || mode.tau0 >= 1 || !(mode.gamma0 > 0)) {
    throw ConfigError("scaling-invariant mode needs tau0 in (0,1), gamma0>0");
  }
  const Eigen::VectorXd f1 = normalized_density(mesh, pair.u1);
  const Eigen::VectorXd f2 = normalized_density(mesh, pair.u2);
  const double r_in = C * mode.sigma;
  const double r_out = mode.r / C;

  const double core_mass = integrate_ball(mesh, f1, mode.z, mode.sigma / 2.0);
  const double ann_mass = integrate_annulus(mesh, f2, mode.z, r_in, r_out);
  bool met = core_mass > mode.gamma0 && ann_mass > mode.gamma0;

  if (met && ann_mass > 0.0) {
    // Spreading over the annulus: no ball around an annulus point at scale
    // tau0 * d(y,z) may dominate the annulus mass.
    double sup_ratio = 0.0;
    for (int i = 0; i < mesh.vertex_count(); ++i) {
      const double d = geodesic_distance(mesh.vertex(i), mode.z);
      if (d < r_in || d >= r_out) continue;
      const double local = integrate_ball(mesh, f2, mesh.vertex(i),
                                          mode.tau0 * d);
      sup_ratio = std::max(sup_ratio, local / ann_mass);
    }
    met = sup_ratio < 1.0 - mode.tau0;
  }

  ImprovedDeficit out;
  out.hypotheses_met = met;
  const double m1 = log_integral_exp(mesh, pair.u1) - mean_value(mesh, pair.u1);
  const double m2 = log_integral_exp(mesh, pair.u2) - mean_value(mesh, pair.u2);
  out.deficit = localized_q(mesh, pair, mode.z, mode.r) +
                eps * q_energy(mesh, pair) - 4.0 * kPi * m1 - 8.0 * kPi * m2;
  return out;
}

ImprovedDeficit singular_deficit(const SphereMesh& mesh, const FieldPair& pair,
                                 const SingularMode& mode, double eps) {
  if (!(mode.r > 0) || !(mode.tau0 > 0) || mode.tau0 >= 1) {
    throw ConfigError("singular mode needs r > 0 and tau0 in (0,1)");
  }
  const Eigen::VectorXd& v = pair.u1;
  check_field(mesh, v, "v");

  // Weighted moment d(x,p)^2 e^{2v} over the ball, max-subtracted.
  const auto inside = mesh.vertices_in_ball(mode.p, mode.r);
  if (inside.empty()) throw ConfigError("ball contains no mesh vertices");
  double m = -std::numeric_limits<double>::infinity();
  for (int i : inside) m = std::max(m, 2.0 * v[i]);
  Eigen::VectorXd weighted = Eigen::VectorXd::Zero(mesh.vertex_count());
  for (int i : inside) {
    weighted[i] = sqr(geodesic_distance(mesh.vertex(i), mode.p)) *
                  std::exp(2.0 * v[i] - m);
  }
  const double total = mesh.integrate(weighted);
  if (!(total > 0.0)) throw NumericError("singular moment vanished");
  const double log_moment = m + std::log(total);

  double sup_ratio = 0.0;
  for (int i : inside) {
    const double d = geodesic_distance(mesh.vertex(i), mode.p);
    const double local =
        integrate_ball(mesh, weighted, mesh.vertex(i), mode.tau0 * d);
    sup_ratio = std::max(sup_ratio, local / total);
  }

  ImprovedDeficit out;
  out.hypotheses_met = sup_ratio < 1.0 - mode.tau0;
  out.deficit = (1.0 + eps) / (8.0 * kPi) *
                    localized_dirichlet(mesh, v, mode.p, mode.r) -
                log_moment;
  return out;
}

}  // namespace

ImprovedDeficit improved_deficit(const SphereMesh& mesh, const FieldPair& pair,
                                 const DeficitMode& mode, double eps) {
  if (!(eps >= 0.0)) throw ConfigError("eps must be nonnegative");
  return std::visit(
      [&](const auto& m) -> ImprovedDeficit {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MacroscopicMode>) {
          return macroscopic_deficit(mesh, pair, m, eps);
        } else if constexpr (std::is_same_v<T, ScalingInvariantMode>) {
          return scaling_invariant_deficit(mesh, pair, m, eps);
        } else {
          return singular_deficit(mesh, pair, m, eps);
        }
      },
      mode);
}

}  // namespace toda
