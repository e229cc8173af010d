// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0

#include "todasphere/fields.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracle_values.hpp"

namespace toda {
namespace {

constexpr double kPi = std::numbers::pi;

const SphereMesh& mesh5() {
  static SphereMesh m = SphereMesh::build_icosphere(5);
  return m;
}

// Smooth deterministic pseudo-random field from low-order harmonics.
Eigen::VectorXd random_smooth_field(const SphereMesh& m, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  const double a = coef(rng), b = coef(rng), c = coef(rng);
  const double d = coef(rng), e = coef(rng), f = coef(rng);
  Eigen::VectorXd u(m.vertex_count());
  for (int i = 0; i < m.vertex_count(); ++i) {
    const Vec3 p = m.vertex(i).v / kSphereRadius;
    u[i] = a * p.x() + b * p.y() + c * p.z() + d * p.x() * p.y() +
           e * (p.z() * p.z() - 1.0 / 3.0) + f * p.y() * p.z();
  }
  return u;
}

// Sharp peak profile centered at z: 2 log lam - 2 log(1 + lam^2 d^2).
Eigen::VectorXd peak_field(const SphereMesh& m, const SurfacePoint& z,
                           double lam) {
  Eigen::VectorXd u(m.vertex_count());
  for (int i = 0; i < m.vertex_count(); ++i) {
    const double d = geodesic_distance(m.vertex(i), z);
    u[i] = 2.0 * std::log(lam) - 2.0 * std::log1p(sqr(lam * d));
  }
  return u;
}

TEST_CASE("q_energy on constants, equal fields, and one-sided pairs") {
  const auto& m = mesh5();
  const int n = m.vertex_count();
  const Eigen::VectorXd u = random_smooth_field(m, 11);
  FieldPair constants{Eigen::VectorXd::Constant(n, 2.0),
                      Eigen::VectorXd::Constant(n, -1.5)};
  CHECK(q_energy(m, constants) == doctest::Approx(0.0).epsilon(1e-12));
  FieldPair same{u, u};
  CHECK(q_energy(m, same) ==
        doctest::Approx(m.dirichlet_energy(u)).epsilon(1e-12));
  FieldPair one{u, Eigen::VectorXd::Zero(n)};
  CHECK(q_energy(m, one) ==
        doctest::Approx(m.dirichlet_energy(u) / 3.0).epsilon(1e-12));
}

TEST_CASE("q_energy satisfies the component-extraction identity") {
  // (1/4) int |grad u2|^2 = Q(u1,u2) - (1/12) int |grad(u2 + 2 u1)|^2.
  const auto& m = mesh5();
  for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
    const Eigen::VectorXd u1 = random_smooth_field(m, seed);
    const Eigen::VectorXd u2 = random_smooth_field(m, seed + 100);
    const double lhs = 0.25 * m.dirichlet_energy(u2);
    const Eigen::VectorXd combo = u2 + 2.0 * u1;
    const double rhs =
        q_energy(m, {u1, u2}) - m.dirichlet_energy(combo) / 12.0;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("j_rho vanishes on constants and is shift invariant") {
  const auto& m = mesh5();
  const int n = m.vertex_count();
  RhoParams params{2.0 * kPi, 6.0 * kPi, {}, {}};
  FieldPair constants{Eigen::VectorXd::Constant(n, 0.7),
                      Eigen::VectorXd::Constant(n, -2.0)};
  CHECK(j_rho(m, constants, params) == doctest::Approx(0.0).epsilon(1e-10));

  FieldPair pair{random_smooth_field(m, 21), random_smooth_field(m, 22)};
  const double base = j_rho(m, pair, params);
  FieldPair shifted{pair.u1.array() + 3.4, pair.u2.array() - 1.2};
  CHECK(j_rho(m, shifted, params) == doctest::Approx(base).epsilon(1e-10));

  // Non-constant weights still leave the shift invariance exact.
  Eigen::VectorXd h(n);
  for (int i = 0; i < n; ++i) h[i] = 1.0 + 0.5 * m.vertex(i).z() / kSphereRadius;
  RhoParams weighted{2.0 * kPi, 2.0 * kPi, h, h};
  const double wbase = j_rho(m, pair, weighted);
  CHECK(j_rho(m, shifted, weighted) == doctest::Approx(wbase).epsilon(1e-10));
  CHECK_THROWS_AS(j_rho(m, pair, RhoParams{-1.0, 1.0, {}, {}}), ConfigError);
}

TEST_CASE("scalar energy and deficits on constants and shifts") {
  const auto& m = mesh5();
  const int n = m.vertex_count();
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(n, 1.3);
  CHECK(i_rho(m, c, 2.0 * kPi) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(mt_deficit(m, Eigen::VectorXd::Zero(n)) ==
        doctest::Approx(0.0).epsilon(1e-12));
  FieldPair zeros{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  CHECK(jw_deficit(m, zeros) == doctest::Approx(0.0).epsilon(1e-12));

  const Eigen::VectorXd u = random_smooth_field(m, 31);
  CHECK(mt_deficit(m, u) ==
        doctest::Approx(mt_deficit(m, (u.array() + 5.0).matrix()))
            .epsilon(1e-10));
  FieldPair pair{u, random_smooth_field(m, 32)};
  FieldPair shifted{pair.u1.array() - 2.0, pair.u2.array() + 1.0};
  CHECK(jw_deficit(m, pair) ==
        doctest::Approx(jw_deficit(m, shifted)).epsilon(1e-10));
}

TEST_CASE("normalized_density is a positive probability density") {
  const auto& m = mesh5();
  const Eigen::VectorXd u = random_smooth_field(m, 41);
  const Eigen::VectorXd f = normalized_density(m, u);
  CHECK(f.minCoeff() > 0.0);
  CHECK(m.integrate(f) == doctest::Approx(1.0).epsilon(1e-12));
  // Constant input gives the uniform density 1.
  const Eigen::VectorXd g =
      normalized_density(m, Eigen::VectorXd::Constant(m.vertex_count(), 9.0));
  CHECK((g.array() - 1.0).abs().maxCoeff() < 1e-12);
  // Shift invariance.
  const Eigen::VectorXd f2 = normalized_density(m, (u.array() + 7.0).matrix());
  CHECK((f - f2).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("face gradient energies reproduce the sparse quadratic forms") {
  const auto& m = mesh5();
  const Eigen::VectorXd u = random_smooth_field(m, 51);
  const Eigen::VectorXd w = random_smooth_field(m, 52);
  // Restricting to the whole sphere recovers the cotangent form exactly.
  const double r_all = 2.0 * kHalfCircumference;
  const SurfacePoint c = SurfacePoint::on_sphere({0, 0, 1});
  CHECK(localized_dirichlet(m, u, c, r_all) ==
        doctest::Approx(m.dirichlet_energy(u)).epsilon(1e-10));
  CHECK(localized_q(m, {u, w}, c, r_all) ==
        doctest::Approx(q_energy(m, {u, w})).epsilon(1e-10));
  // Localized energies are monotone in the radius.
  const double half = localized_dirichlet(m, u, c, kHalfCircumference / 2);
  CHECK(half >= 0.0);
  CHECK(half <= m.dirichlet_energy(u) + 1e-12);
}

TEST_CASE("ball and annulus integrals partition the sphere") {
  const auto& m = mesh5();
  const Eigen::VectorXd f =
      normalized_density(m, random_smooth_field(m, 61));
  const SurfacePoint c = SurfacePoint::on_sphere({1, 1, 0});
  const double r = 0.4;
  const double inside = integrate_ball(m, f, c, r);
  const double outside =
      integrate_annulus(m, f, c, r, 2.0 * kHalfCircumference);
  CHECK(inside + outside == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(integrate_ball(m, f, c, 0.2) ==
        doctest::Approx(inside - integrate_annulus(m, f, c, 0.2, r))
            .epsilon(1e-10));
}

TEST_CASE("distance to the critical coupling grid") {
  CHECK(distance_to_critical_set(4.0 * kPi, 1.0) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(distance_to_critical_set(2.0 * kPi, 2.0 * kPi) ==
        doctest::Approx(2.0 * kPi).epsilon(1e-12));
  CHECK(distance_to_critical_set(9.0 * kPi, 6.0 * kPi) ==
        doctest::Approx(kPi).epsilon(1e-12));
}

TEST_CASE("macroscopic improved deficit on constants and split peaks") {
  const auto& m = mesh5();
  const int n = m.vertex_count();
  FieldPair zeros{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  // Uniform densities spread trivially once theta is below the ball mass.
  const auto uniform = improved_deficit(
      m, zeros, MacroscopicMode{1, 0, 0.3, 0.005}, 0.1);
  CHECK(uniform.hypotheses_met);
  CHECK(uniform.deficit == doctest::Approx(0.0).epsilon(1e-10));

  // Two sharp peaks in u1 carry theta mass in two separated balls.
  const SurfacePoint a = SurfacePoint::on_sphere({0, 0, 1});
  const SurfacePoint b = SurfacePoint::on_sphere({1, 0, 0});
  Eigen::VectorXd two = ((peak_field(m, a, 20.0).array().exp() +
                          peak_field(m, b, 20.0).array().exp()) /
                         2.0)
                            .log()
                            .matrix();
  const auto split = improved_deficit(
      m, {two, Eigen::VectorXd::Zero(n)}, MacroscopicMode{1, 0, 0.3, 0.01},
      0.1);
  CHECK(split.hypotheses_met);
  // A single peak cannot fill two separated balls with theta = 0.3.
  const auto single = improved_deficit(
      m, {peak_field(m, a, 20.0), Eigen::VectorXd::Zero(n)},
      MacroscopicMode{1, 0, 0.3, 0.3}, 0.1);
  CHECK_FALSE(single.hypotheses_met);
}

TEST_CASE("scaling-invariant improved deficit hypotheses") {
  const auto& m = mesh5();
  const SurfacePoint z = SurfacePoint::on_sphere({0, 0, 1});
  const double sigma = 0.04, r = 0.8;
  // u1 peaked at z at scale sigma/2; u2 an azimuthal ridge in the annulus.
  const Eigen::VectorXd u1 = peak_field(m, z, 50.0);
  Eigen::VectorXd u2(m.vertex_count());
  for (int i = 0; i < m.vertex_count(); ++i) {
    const double d = geodesic_distance(m.vertex(i), z);
    u2[i] = -sqr((d - 0.18) / 0.02);
  }
  const auto good = improved_deficit(
      m, {u1, u2}, ScalingInvariantMode{z, sigma, r, 0.3, 0.3}, 0.1);
  CHECK(good.hypotheses_met);
  CHECK(std::isfinite(good.deficit));

  // Concentrating u2 at a single annulus point violates the spreading bound.
  const SurfacePoint spot = SurfacePoint::on_sphere({std::sin(0.18 / kSphereRadius), 0,
                                                     std::cos(0.18 / kSphereRadius)});
  const auto bad = improved_deficit(
      m, {u1, peak_field(m, spot, 120.0)},
      ScalingInvariantMode{z, sigma, r, 0.3, 0.3}, 0.1);
  CHECK_FALSE(bad.hypotheses_met);

  CHECK_THROWS_AS(improved_deficit(m, {u1, u2},
                                   ScalingInvariantMode{z, 0.2, 0.8, 0.1, 0.3},
                                   0.1),
                  ConfigError);
}

TEST_CASE("singular improved deficit on the zero field") {
  const auto& m = mesh5();
  const int n = m.vertex_count();
  const SurfacePoint p = SurfacePoint::on_sphere({0, 1, 0});
  const double r = 0.5;
  FieldPair pair{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  const auto res = improved_deficit(m, pair, SingularMode{p, r, 0.1}, 0.0);
  CHECK(res.hypotheses_met);
  // For v = 0 the deficit is -log of the second moment of the ball; compare
  // against direct 1-D quadrature of t^2 * ring(t).
  double moment = 0.0;
  const int steps = 20000;
  for (int i = 0; i < steps; ++i) {
    const double t = (i + 0.5) * r / steps;
    moment += sqr(t) * 2.0 * kPi * kSphereRadius *
              std::sin(t / kSphereRadius) * (r / steps);
  }
  CHECK(res.deficit == doctest::Approx(-std::log(moment)).epsilon(0.02));
}

}  // namespace
}  // namespace toda
