// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central configuration: every threshold, ladder, ramp and cap used by the
// barycenter projections, concentration maps, retractions and test-function
// synthesis.  Defaults respect all orderings the construction relies on;
// validate() re-checks them after any override.
#pragma once

#include <cmath>
#include <map>
#include <string>

#include "todasphere/common.hpp"

namespace toda {

struct ConstantsConfig {
  // --- barycenter-closeness ladders -----------------------------------
  // eps(l) controls how close a density must be to the l-point barycenter
  // set before the l-point machinery activates; each rung is a factor
  // eps_ratio below the previous.  eps(0) extends the ladder upward by one
  // factor so that localization radii eps_prime(l-1) exist for l = 1.
  double eps1 = 0.05;
  double eps_ratio = 0.1;           // eps(l) = eps(l-1) * eps_ratio
  double eps_prime_factor = 0.1;    // eps_prime(l) = eps(l) * factor

  // --- separation / margin thresholds ---------------------------------
  double delta = 0.1;               // atom separation + weight margin
  double delta2 = 0.1 / 20.0;       // near-support exclusion radius
  double delta1 = 0.1 / 20.0 / 16.0;  // repulsion-kernel knee
  double delta3 = 1e-3;             // interpolation band for flow blending
  double delta_bar = 0.2;           // dilation activation radius
  // Radius ratio defining concentration scales, and its tripled version.
  double R = 10.0;
  double R0 = 30.0;

  // --- caps and ramps --------------------------------------------------
  double tau1 = 10.0;               // knee of the scaling caps
  // Inverse-radius threshold of the near-point collapse.  Must satisfy
  // 4/tau_bar <= delta1: any two atoms inside the collapse zone are then
  // closer than the repulsion knee (and than one mesh spacing), so the
  // merging flow absorbs them and the collapsed measure cannot end up with
  // a stray pair straddling the 1/tau_bar sphere.
  double tau_bar = 16000.0;
  double M = 100.0;                 // join-parameter scale-ratio threshold
  double ramp_cap = 1e8;            // divergence cap for the scaling ramps

  // Universal lower bound for the peak concentration functional
  // (fitted once over the density corpus at R = 10 and frozen; see
  // tests/test_concentration.cpp for the calibration record).
  double tau_universal = 0.0027123191;

  // Largest admissible concentration scale for the center-of-mass map
  // (keeps the weighted ambient average inside the convex hull regime).
  double delta_co = 0.2 * kSphereRadius;

  // --- test-function parameter ladder ----------------------------------
  double mu_exponent = 2.0;         // mu = lambda^2
  double tau_tilde_exponent = 6.0;  // tau_tilde = lambda^6

  // --- mesh ------------------------------------------------------------
  int mesh_level = 5;

  // --- derived ladders --------------------------------------------------
  double eps(int l) const {
    // l >= 0;  eps(1) = eps1.
    return eps1 * std::pow(eps_ratio, l - 1);
  }
  double eps_prime(int l) const { return eps(l) * eps_prime_factor; }

  double mu_of(double lambda) const { return std::pow(lambda, mu_exponent); }
  double tau_tilde_of(double lambda) const {
    return std::pow(lambda, tau_tilde_exponent);
  }

  // Throws ConfigError when an ordering the construction depends on is
  // violated.  Called by the CLI before any computation.
  void validate() const;
};

// Parse "key = value" lines (# comments allowed) into overrides applied on
// top of the defaults; unknown keys are rejected.
ConstantsConfig parse_constants(const std::map<std::string, std::string>& kv,
                                ConstantsConfig base = {});

}  // namespace toda
