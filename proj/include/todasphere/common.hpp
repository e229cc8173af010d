// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared basics: error taxonomy, the ambient vector type, and a few
// numeric helpers used across the library.
#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <string>

namespace toda {

using Vec3 = Eigen::Vector3d;

// Radius of the round sphere whose total area is 1 (4*pi*r0^2 = 1).
inline constexpr double kSphereRadius = 0.2820947917738781435;

// Half circumference = diameter in the geodesic metric: pi * r0.
inline constexpr double kHalfCircumference = 0.8862269254527579409;

// Raised when a configuration or argument violates a documented
// precondition that the caller could have checked (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when an input lies outside the mathematical domain of a map
// (e.g. a measure outside the retraction's domain).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Raised on numeric failure: overflow, non-convergence, degenerate data
// (CLI exit code 1).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Piecewise-linear ramp: 0 for t <= lo, 1 for t >= hi, linear between.
// The library's cut-off functions are all built from this shape (their
// defining plateaus come first; the connecting segment is linear).
inline double ramp_up(double t, double lo, double hi) {
  if (t <= lo) return 0.0;
  if (t >= hi) return 1.0;
  return (t - lo) / (hi - lo);
}

// Complement ramp: 1 for t <= lo, 0 for t >= hi.
inline double ramp_down(double t, double lo, double hi) {
  return 1.0 - ramp_up(t, lo, hi);
}

inline double clamp01(double t) { return t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t); }

inline double sqr(double x) { return x * x; }

}  // namespace toda
