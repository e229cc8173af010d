// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0

#include "todasphere/mesh.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>

#include "doctest.h"
#include "oracle_values.hpp"
#include "todasphere/constants.hpp"

namespace toda {
namespace {

const SphereMesh& mesh5() {
  static SphereMesh m = SphereMesh::build_icosphere(5);
  return m;
}

TEST_CASE("icosphere vertex and face counts follow 10*4^level + 2") {
  const SphereMesh m0 = SphereMesh::build_icosphere(0);
  CHECK(m0.vertex_count() == 12);
  CHECK(m0.face_count() == 20);
  const SphereMesh m3 = SphereMesh::build_icosphere(3);
  CHECK(m3.vertex_count() == 642);
  CHECK(m3.face_count() == 1280);
  CHECK(mesh5().vertex_count() == 10242);
}

TEST_CASE("quadrature weights are positive and sum to the unit area") {
  const auto& m = mesh5();
  CHECK(m.quad_weights().minCoeff() > 0.0);
  CHECK(m.quad_weights().sum() == doctest::Approx(1.0).epsilon(1e-12));
  // Constant field integrates exactly.
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.vertex_count());
  CHECK(m.integrate(ones) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("second moment of a coordinate matches the closed form") {
  const auto& m = mesh5();
  Eigen::VectorXd f(m.vertex_count());
  for (int i = 0; i < m.vertex_count(); ++i) f[i] = sqr(m.vertex(i).z());
  CHECK(m.integrate(f) ==
        doctest::Approx(oracle::kX3SquaredIntegral).epsilon(1e-4));
}

TEST_CASE("laplacian annihilates constants and is symmetric PSD") {
  const auto& m = mesh5();
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.vertex_count());
  CHECK((m.laplacian() * ones).lpNorm<Eigen::Infinity>() < 1e-10);
  const Eigen::SparseMatrix<double> diff =
      Eigen::SparseMatrix<double>(m.laplacian().transpose()) - m.laplacian();
  CHECK(diff.coeffs().cwiseAbs().maxCoeff() < 1e-14);
  // PSD on a few pseudo-random fields.
  std::srand(7);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd f = Eigen::VectorXd::Random(m.vertex_count());
    CHECK(m.dirichlet_energy(f) >= 0.0);
  }
}

TEST_CASE("dirichlet energy of a linear coordinate converges to 2/3") {
  // On the area-1 sphere the restriction of x3 has energy 2/3.
  const auto& m = mesh5();
  Eigen::VectorXd f(m.vertex_count());
  for (int i = 0; i < m.vertex_count(); ++i) f[i] = m.vertex(i).z();
  const double e5 = m.dirichlet_energy(f);
  CHECK(e5 == doctest::Approx(oracle::kDirichletX3).epsilon(0.02));

  const SphereMesh m6 = SphereMesh::build_icosphere(6);
  Eigen::VectorXd g(m6.vertex_count());
  for (int i = 0; i < m6.vertex_count(); ++i) g[i] = m6.vertex(i).z();
  const double e6 = m6.dirichlet_energy(g);
  // Second-order convergence: the error should shrink by about 4x.
  CHECK(std::abs(e6 - oracle::kDirichletX3) <
        0.5 * std::abs(e5 - oracle::kDirichletX3));
}

TEST_CASE("geodesic distance reproduces antipodal and orthogonal arcs") {
  const SurfacePoint north = SurfacePoint::on_sphere({0, 0, 1});
  const SurfacePoint south = SurfacePoint::on_sphere({0, 0, -1});
  const SurfacePoint east = SurfacePoint::on_sphere({1, 0, 0});
  CHECK(geodesic_distance(north, south) ==
        doctest::Approx(oracle::kHalfCircumference).epsilon(1e-14));
  CHECK(geodesic_distance(north, east) ==
        doctest::Approx(oracle::kQuarterCircumference).epsilon(1e-14));
  CHECK(geodesic_distance(north, north) == 0.0);
}

TEST_CASE("exp_map travels the requested arc length") {
  const SurfacePoint p = SurfacePoint::on_sphere({0.3, -0.2, 0.9});
  const auto basis = tangent_basis(p);
  for (const double len : {1e-6, 0.01, 0.3, kHalfCircumference * 0.99}) {
    const SurfacePoint q = exp_map(p, len * basis[0]);
    CHECK(geodesic_distance(p, q) == doctest::Approx(len).epsilon(1e-10));
  }
  // Zero velocity is the identity; half circumference reaches the antipode.
  CHECK(geodesic_distance(exp_map(p, Vec3::Zero()), p) == 0.0);
  const SurfacePoint anti = exp_map(p, kHalfCircumference * basis[1]);
  CHECK((anti.v + p.v).norm() < 1e-12);
  CHECK_THROWS_AS(exp_map(p, p.v), DomainError);
}

TEST_CASE("log_map inverts exp_map") {
  const SurfacePoint p = SurfacePoint::on_sphere({-0.1, 0.7, 0.2});
  const SurfacePoint q = SurfacePoint::on_sphere({0.5, 0.1, -0.4});
  const Vec3 w = log_map(p, q);
  CHECK(std::abs(w.dot(p.v)) < 1e-12);
  CHECK(w.norm() == doctest::Approx(geodesic_distance(p, q)).epsilon(1e-12));
  CHECK(geodesic_distance(exp_map(p, w), q) < 1e-12);
  // Midpoint via geodesic_point is equidistant.
  const SurfacePoint mid = geodesic_point(p, q, 0.5);
  CHECK(geodesic_distance(p, mid) ==
        doctest::Approx(geodesic_distance(mid, q)).epsilon(1e-10));
}

TEST_CASE("vertices_in_ball agrees with a direct distance scan") {
  const auto& m = mesh5();
  const SurfacePoint c = SurfacePoint::on_sphere({0.2, 0.5, 0.6});
  const double r = 0.17;
  const auto inside = m.vertices_in_ball(c, r);
  int direct = 0;
  for (int i = 0; i < m.vertex_count(); ++i) {
    if (geodesic_distance(m.vertex(i), c) <= r) ++direct;
  }
  CHECK(static_cast<int>(inside.size()) == direct);
  for (int i : inside) CHECK(geodesic_distance(m.vertex(i), c) <= r + 1e-12);
}

TEST_CASE("nearest_vertex returns a true minimizer") {
  const auto& m = mesh5();
  const SurfacePoint p = SurfacePoint::on_sphere({0.9, -0.1, 0.42});
  const int best = m.nearest_vertex(p);
  const double d_best = geodesic_distance(m.vertex(best), p);
  for (int i = 0; i < m.vertex_count(); i += 97) {
    CHECK(d_best <= geodesic_distance(m.vertex(i), p) + 1e-15);
  }
  CHECK(d_best <= m.spacing());
}

TEST_CASE("mesh round-trips through save/load") {
  const SphereMesh m = SphereMesh::build_icosphere(2);
  const std::string path = "/tmp/todasphere_test_mesh.txt";
  m.save(path);
  const SphereMesh back = SphereMesh::load(path);
  CHECK(back.level() == 2);
  CHECK(back.vertex_count() == m.vertex_count());
  CHECK(back.face_count() == m.face_count());
  CHECK((back.quad_weights() - m.quad_weights()).lpNorm<Eigen::Infinity>() <
        1e-15);
  CHECK(back.vertex(37).v.isApprox(m.vertex(37).v, 1e-15));
  CHECK_THROWS_AS(SphereMesh::load("/tmp/does_not_exist.mesh"), ConfigError);
}

TEST_CASE("constants defaults validate and overrides are parsed") {
  ConstantsConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.eps(1) == doctest::Approx(0.05));
  CHECK(c.eps(2) == doctest::Approx(0.005));
  CHECK(c.eps_prime(1) == doctest::Approx(0.005));
  CHECK(c.eps(0) == doctest::Approx(0.5));
  CHECK(c.mu_of(100.0) == doctest::Approx(1e4));
  CHECK(c.tau_tilde_of(100.0) == doctest::Approx(1e12));

  const ConstantsConfig d = parse_constants({{"delta", "0.2"}, {"R", "5"}});
  CHECK(d.delta == doctest::Approx(0.2));
  CHECK(d.R0 == doctest::Approx(15.0));
  CHECK_THROWS_AS(parse_constants({{"nope", "1"}}), ConfigError);
  CHECK_THROWS_AS(parse_constants({{"delta", "abc"}}), ConfigError);
  // The collapse threshold must stay clear of the blending band.
  CHECK_THROWS_AS(parse_constants({{"tau_bar", "100"}}), ConfigError);
}

}  // namespace
}  // namespace toda
