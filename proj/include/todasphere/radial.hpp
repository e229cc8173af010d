// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0
//
// One-dimensional geodesic-polar quadrature: exact ring/cap geometry,
// Gauss-Legendre panels refined around feature scales, closed-form peak
// profiles and their energies, and tabulated cumulative mass functions for
// radially symmetric measures.  This machinery evaluates integrals whose
// features live far below any practical mesh resolution.
#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "todasphere/common.hpp"

namespace toda {

// Circumference of the geodesic circle of radius d around any point.
double ring_length(double d);

// Area of the geodesic ball of radius r (closed form; 1 at r = pi*r0).
double cap_area(double r);

// Gauss-Legendre nodes and weights on [-1, 1]; cached per order.
const std::vector<std::pair<double, double>>& gauss_legendre(int n);

// Panel boundaries for [0, r_max]: one panel from 0 to the smallest scale,
// then geometric subdivision (about panels_per_decade panels per decade)
// between consecutive scales and up to r_max.
std::vector<double> panel_boundaries(std::vector<double> scales, double r_max,
                                     double panels_per_decade = 2.0);

// Integral over the sphere of the radial function g(d(x, c)):
//   int_0^{r_max} g(t) ring_length(t) dt,
// with Gauss-Legendre panels between the feature scales.
double integrate_radial(const std::function<double(double)>& g,
                        const std::vector<double>& scales,
                        double r_max = kHalfCircumference,
                        int points_per_panel = 16,
                        double panels_per_decade = 2.0);

// ---------------------------------------------------------------------------
// Peak profiles
// ---------------------------------------------------------------------------

// log((lam / (1 + lam^2 d^2))^2): the standard concentration profile with
// maximum 2 log(lam) and mass localizing at scale 1/lam.
double bubble_log_profile(double lam, double d);

// Derivative of the profile in the radial variable.
double bubble_log_profile_deriv(double lam, double d);

// Exact 1-D evaluation of the profile's energies on the sphere.
struct RadialEnergy {
  double dirichlet = 0.0;    // int |grad|^2
  double mean = 0.0;         // int of the profile (unit area)
  double log_int_exp = 0.0;  // log int e^{profile}
};
RadialEnergy bubble_energy(double lam);

// Scalar energy (1/2) dirichlet + 2 rho (mean - log int e) of the profile.
double i_rho_bubble(double lam, double rho);

// ---------------------------------------------------------------------------
// Radial mass distributions
// ---------------------------------------------------------------------------

// Fraction of the geodesic circle of radius rho around a point c that lies
// inside the ball B_r(q), where d = d(c, q).  Exact spherical triangle
// solution, valid in all wrap-around cases.
double circle_ball_fraction(double rho, double d, double r);

// Cumulative mass of a nonnegative 1-D density m(t) dt on [0, r_max]
// (m includes any ring factor), tabulated on panel-refined grids.
class TabulatedCDF {
 public:
  TabulatedCDF() = default;
  static TabulatedCDF build(const std::function<double(double)>& mass_density,
                            const std::vector<double>& scales, double r_max,
                            int subdivisions_per_panel = 8);

  double total() const { return total_; }          // unnormalized mass
  double value(double t) const;                     // normalized CDF
  double support_radius() const { return r_max_; }

  // Restriction to [0, r]: the tail beyond r is discarded and the rest
  // renormalized.  Raises DomainError when no mass lies inside r.
  TabulatedCDF truncated(double r) const;

 private:
  std::vector<double> t_;
  std::vector<double> cum_;  // unnormalized cumulative at t_
  double total_ = 0.0;
  double r_max_ = 0.0;
};

}  // namespace toda
