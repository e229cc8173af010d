// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0

#include "todasphere/radial.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace toda {

namespace {
constexpr double kPi = std::numbers::pi;
}

double ring_length(double d) {
  return 2.0 * kPi * kSphereRadius * std::sin(d / kSphereRadius);
}

double cap_area(double r) {
  if (r <= 0.0) return 0.0;
  if (r >= kHalfCircumference) return 1.0;
  const double c = 2.0 * kPi * sqr(kSphereRadius);
  return c * (1.0 - std::cos(r / kSphereRadius));
}

const std::vector<std::pair<double, double>>& gauss_legendre(int n) {
  if (n < 1 || n > 64) throw ConfigError("Gauss-Legendre order out of range");
  static std::map<int, std::vector<std::pair<double, double>>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  // Newton iteration from the Chebyshev initial guess; standard recurrence
  // for Legendre polynomials and their derivative.
  std::vector<std::pair<double, double>> nw(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    nw[i] = {-x, w};
    nw[n - 1 - i] = {x, w};
  }
  return cache.emplace(n, std::move(nw)).first->second;
}

std::vector<double> panel_boundaries(std::vector<double> scales, double r_max,
                                     double panels_per_decade) {
  if (!(r_max > 0.0)) throw ConfigError("panel range must be positive");
  std::sort(scales.begin(), scales.end());
  std::vector<double> knots;
  for (double s : scales) {
    if (s > 1e-300 && s < r_max * (1.0 - 1e-12)) {
      if (knots.empty() || s > knots.back() * (1.0 + 1e-12)) knots.push_back(s);
    }
  }
  if (knots.empty()) knots.push_back(r_max / 16.0);

  std::vector<double> bounds{0.0, knots.front()};
  auto geometric_fill = [&](double a, double b) {
    const int panels = std::max(
        1, static_cast<int>(std::ceil(std::log10(b / a) * panels_per_decade)));
    const double ratio = std::pow(b / a, 1.0 / panels);
    double t = a;
    for (int i = 1; i <= panels; ++i) {
      t = (i == panels) ? b : t * ratio;
      bounds.push_back(t);
    }
  };
  for (size_t i = 0; i + 1 < knots.size(); ++i) {
    geometric_fill(knots[i], knots[i + 1]);
  }
  if (knots.back() < r_max * (1.0 - 1e-12)) geometric_fill(knots.back(), r_max);
  return bounds;
}

double integrate_radial(const std::function<double(double)>& g,
                        const std::vector<double>& scales, double r_max,
                        int points_per_panel, double panels_per_decade) {
  const auto bounds = panel_boundaries(scales, r_max, panels_per_decade);
  const auto& gl = gauss_legendre(points_per_panel);
  double acc = 0.0;
  for (size_t p = 0; p + 1 < bounds.size(); ++p) {
    const double a = bounds[p], b = bounds[p + 1];
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (const auto& [x, w] : gl) {
      const double t = mid + half * x;
      acc += w * half * g(t) * ring_length(t);
    }
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Peak profiles
// ---------------------------------------------------------------------------

double bubble_log_profile(double lam, double d) {
  return 2.0 * std::log(lam) - 2.0 * std::log1p(sqr(lam * d));
}

double bubble_log_profile_deriv(double lam, double d) {
  return -4.0 * sqr(lam) * d / (1.0 + sqr(lam * d));
}

RadialEnergy bubble_energy(double lam) {
  if (!(lam >= 1.0)) throw ConfigError("profile sharpness must be >= 1");
  const std::vector<double> peak_scales{0.1 / lam, 1.0 / lam, 10.0 / lam};
  RadialEnergy e;
  e.dirichlet = integrate_radial(
      [&](double t) { return sqr(bubble_log_profile_deriv(lam, t)); },
      peak_scales, kHalfCircumference, 16, 3.0);
  e.mean = integrate_radial(
      [&](double t) { return bubble_log_profile(lam, t); }, peak_scales,
      kHalfCircumference, 16, 3.0);
  // e^{profile} = lam^2/(1+lam^2 d^2)^2 never overflows for lam in range.
  e.log_int_exp = std::log(integrate_radial(
      [&](double t) { return std::exp(bubble_log_profile(lam, t)); },
      peak_scales, kHalfCircumference, 16, 3.0));
  return e;
}

double i_rho_bubble(double lam, double rho) {
  const RadialEnergy e = bubble_energy(lam);
  return 0.5 * e.dirichlet + 2.0 * rho * (e.mean - e.log_int_exp);
}

// ---------------------------------------------------------------------------
// Radial mass distributions
// ---------------------------------------------------------------------------

double circle_ball_fraction(double rho, double d, double r) {
  if (r <= 0.0) return 0.0;
  if (r >= kHalfCircumference) return 1.0;
  const double a = rho / kSphereRadius;
  const double b = d / kSphereRadius;
  const double c = r / kSphereRadius;
  const double sa = std::sin(a), sb = std::sin(b);
  if (sa < 1e-14) {
    // Circle degenerates to the center (rho ~ 0) or its antipode.
    const double dist = (a < kPi / 2) ? d : kHalfCircumference - d;
    return dist <= r ? 1.0 : 0.0;
  }
  if (sb < 1e-14) {
    // Concentric: the ball is centered at the circle's center or antipode.
    const double dist = (b < kPi / 2) ? rho : kHalfCircumference - rho;
    return dist <= r ? 1.0 : 0.0;
  }
  const double arg = (std::cos(c) - std::cos(a) * std::cos(b)) / (sa * sb);
  if (arg <= -1.0) return 1.0;
  if (arg >= 1.0) return 0.0;
  return std::acos(arg) / kPi;
}

TabulatedCDF TabulatedCDF::build(
    const std::function<double(double)>& mass_density,
    const std::vector<double>& scales, double r_max,
    int subdivisions_per_panel) {
  TabulatedCDF cdf;
  cdf.r_max_ = r_max;
  const auto bounds = panel_boundaries(scales, r_max, 2.0);
  const auto& gl = gauss_legendre(8);

  cdf.t_.push_back(0.0);
  cdf.cum_.push_back(0.0);
  double acc = 0.0;
  for (size_t p = 0; p + 1 < bounds.size(); ++p) {
    for (int s = 0; s < subdivisions_per_panel; ++s) {
      const double a =
          bounds[p] + (bounds[p + 1] - bounds[p]) * s / subdivisions_per_panel;
      const double b = bounds[p] + (bounds[p + 1] - bounds[p]) * (s + 1) /
                                       subdivisions_per_panel;
      const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      double piece = 0.0;
      for (const auto& [x, w] : gl) piece += w * half * mass_density(mid + half * x);
      acc += std::max(piece, 0.0);
      cdf.t_.push_back(b);
      cdf.cum_.push_back(acc);
    }
  }
  cdf.total_ = acc;
  return cdf;
}

double TabulatedCDF::value(double t) const {
  if (t_.empty() || total_ <= 0.0) return 0.0;
  if (t <= 0.0) return 0.0;
  if (t >= t_.back()) return 1.0;
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  const size_t i = it - t_.begin();  // t_[i-1] <= t < t_[i]
  const double a = t_[i - 1], b = t_[i];
  const double frac = (t - a) / (b - a);
  return (cum_[i - 1] + frac * (cum_[i] - cum_[i - 1])) / total_;
}

TabulatedCDF TabulatedCDF::truncated(double r) const {
  if (!(r > 0.0)) throw DomainError("truncated: radius must be positive");
  const double inside = value(r) * total_;
  if (inside <= 0.0) {
    throw DomainError("truncated: no mass inside the truncation radius");
  }
  TabulatedCDF out;
  for (size_t i = 0; i < t_.size() && t_[i] < r; ++i) {
    out.t_.push_back(t_[i]);
    out.cum_.push_back(cum_[i]);
  }
  if (out.t_.empty() || out.t_.back() < r) {
    out.t_.push_back(r);
    out.cum_.push_back(inside);
  }
  out.total_ = inside;
  out.r_max_ = r;
  return out;
}

}  // namespace toda
