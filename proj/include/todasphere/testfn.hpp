// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0
//
// Two-field test functions that concentrate prescribed fractions of their
// exponential mass at chosen sites: single peaks, sums of peaks modelled on
// atomic measures, and the interpolating family over join elements
// (measure, point, weight) built from a dilation toward the marked point,
// a hub profile, a ring profile, and per-atom peaks.  The family crosses
// six parameter regimes that match continuously in the join weight.
//
// Peak cores and ring widths routinely sit many orders of magnitude below
// mesh resolution, so every field comes with closed-form pointwise value
// and gradient evaluators, and all integrals are computed on polar-cap
// quadrature schemes around the concentration centers with the mesh as far
// field.  Vertex samplings of the same fields are retained for operators
// that need the mesh (Laplacians, cross-checks at resolvable scales).
#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "todasphere/concentration.hpp"
#include "todasphere/constants.hpp"
#include "todasphere/density.hpp"
#include "todasphere/fields.hpp"
#include "todasphere/measures.hpp"
#include "todasphere/mesh.hpp"
#include "todasphere/quadrature.hpp"

namespace toda {

// --------------------------------------------------------------------------
// Simple peak fields
// --------------------------------------------------------------------------

// log (lam / (1 + lam^2 d(x,z)^2))^2: maximum 2 log lam at z, exponential
// mass ~ pi concentrating in B_{1/lam}(z).
Eigen::VectorXd regular_bubble(const SphereMesh& mesh, double lam,
                               const SurfacePoint& z);

// log sum_i t_i (lam / (1 + lam^2 d(x, x_i)^2))^2 over the atoms of nu;
// the normalized exponential converges to nu as lam grows.
Eigen::VectorXd standard_family(const SphereMesh& mesh, double lam,
                                const AtomicMeasure& nu);

// --------------------------------------------------------------------------
// Parameter block of the concentrated pair
// --------------------------------------------------------------------------

// Monotone dilation caps with knee at config.tau1 and divergence capped at
// config.ramp_cap: p_hat_ramp is 1 up to tau1 and climbs to the cap across
// (tau1, 2 tau1); p_check_ramp mirrors it downward, at the cap up to
// 2 tau1 and equal to 1 from 4 tau1 on.
double p_hat_ramp(double t, const ConstantsConfig& config);
double p_check_ramp(double t, const ConstantsConfig& config);

// Per-atom state of the configuration dilated toward the marked point p.
struct BubbleAtom {
  SurfacePoint x;        // atom position (after the clearing retraction)
  double weight = 0.0;   // atom weight
  double d = 0.0;        // geodesic distance d(x, p)
  SurfacePoint x_tilde;  // position pulled toward p by the dilation
  double s_tilde = 1.0;  // per-atom dilation factor, in [1, s_hat]
  double d_tilde = 0.0;  // d(x_tilde, p) = d / s_tilde
  double lambda_i = 0.0;  // per-atom concentration parameter
  double s_i = 1.0;       // complementary scale: s_i * s_tilde = s_hat^2
  bool detached = false;  // d > 4 / lambda_i: own peak separate from the hub
  bool on_plateau = false;  // d <= 1 / tau_lambda
};

// Derived parameters of the two-field configuration at (nu, p).  The
// measure is first passed through the retraction clearing B(p); tau is the
// inverse mean distance of the retracted mass remaining within 2*delta2 of
// p (weighted by the complementary near cutoff), with the continuous
// empty-limit 1/(2 delta2) and +infinity for mass exactly at p.  The
// dilation strength actually applied near p (s_hat) and the atom-scale
// gain (s_check) follow the capped ramps above.
struct BubbleParams {
  AtomicMeasure nu_hat = AtomicMeasure::dirac(SurfacePoint{});  // retracted measure
  SurfacePoint p;
  double s_frak = 1.0;      // requested dilation strength, >= 1
  double lambda = 0.0;      // base concentration parameter
  double mu = 0.0;          // ring outer scale parameter
  double tau_tilde = 0.0;   // ring inner scale parameter
  double tau = 0.0;         // concentration of the near mass (may be +inf)
  double tau_lambda = 0.0;  // min(tau, lambda)
  double s_hat = 1.0;       // capped dilation applied near p
  double s_check = 1.0;     // capped gain on the atom scale
  double lambda_check = 0.0;  // s_check * lambda
  std::vector<BubbleAtom> atoms;    // one entry per atom of nu_hat
  std::vector<int> detached;        // indices with d > 4 / lambda_i
  std::vector<int> detached_inner;  // detached with d <= 1 / tau_lambda
  std::vector<int> detached_outer;  // detached with d > 1 / tau_lambda
};

// Computes the full parameter block.  Requires s_frak >= 1 and the scale
// ordering tau_tilde >= 2 mu >= 4 lambda >= 4; raises ConfigError
// otherwise and propagates the retraction's DomainError when p carries
// atoms of a non-degenerate nu.
BubbleParams bubble_params(const AtomicMeasure& nu, const SurfacePoint& p,
                           double s_frak, double lambda, double mu,
                           double tau_tilde, const ConstantsConfig& config);

// --------------------------------------------------------------------------
// The synthesized pair
// --------------------------------------------------------------------------

// Resolved synthesis state: peak positions and scales plus the component
// multipliers of the active regime.  Every field value and gradient is a
// closed form in this data.
struct PairRecipe {
  struct Peak {
    SurfacePoint y;       // peak center
    double w = 0.0;       // peak weight in the logarithmic sum
    double log_c = 0.0;   // log of the sharpness factor (knee at 1/c)
    double r_in = 0.0;    // core radius: profile constant inside
    double scale = 0.0;   // diagnostic: effective concentration 1/r_in
  };
  std::vector<Peak> peaks;
  SurfacePoint p;            // hub / ring center
  double hub_scale = 0.0;    // s_hat * tau_lambda
  double ring_inner = 0.0;   // 1 / (s_hat * tau_tilde)
  double ring_outer = 0.0;   // 1 / (s_hat * mu)
  double ring_top = 0.0;     // plateau value 4 log(tau_tilde / mu)
  double a_peaks = 1.0;      // multiplier of the peak component
  double b_hub = 1.0;        // multiplier of the hub component
  double c_ring = 1.0;       // multiplier of the ring component
};

// A pair of fields phi1 = v11 + v12 - v2/2 and phi2 = -v11/2 + v2, where
// v11 is the (regime-weighted) peak component, v12 the hub component and
// v2 the ring component; the identities hold for the stored vertex fields
// in every regime.  Pointwise evaluators return exact values and tangent
// gradients at arbitrary surface points.
struct TestFunctionPair {
  Eigen::VectorXd phi1, phi2;
  Eigen::VectorXd v11, v12, v2;
  BubbleParams params;
  PairRecipe recipe;

  double v11_at(const SurfacePoint& x) const;
  double v12_at(const SurfacePoint& x) const;
  double v2_at(const SurfacePoint& x) const;
  double phi1_at(const SurfacePoint& x) const;
  double phi2_at(const SurfacePoint& x) const;
  Vec3 grad_v11_at(const SurfacePoint& x) const;
  Vec3 grad_v12_at(const SurfacePoint& x) const;
  Vec3 grad_v2_at(const SurfacePoint& x) const;
  Vec3 grad_phi1_at(const SurfacePoint& x) const;
  Vec3 grad_phi2_at(const SurfacePoint& x) const;
};

// Base synthesis: both fields at full strength for the given parameters.
TestFunctionPair phi_pair(const SphereMesh& mesh, const BubbleParams& params);

// The interpolating family over join elements (nu, p, s).  lambda sets the
// base scale; mu and tau_tilde follow the configured ladder.  Dispatches
// on s across six regimes that agree at the boundaries:
//   [3/4, 1]    both components flatten toward the pure ring pair;
//   [1/4, 3/4]  dilation strength slides between 1 and its switch value;
//   [3/16, 1/4] the ring component flattens away;
//   [1/8, 3/16] hub and peak sharpening unwind to plain capped peaks;
//   [1/16, 1/8] peaks travel from the dilated to the retracted positions;
//   [0, 1/16]   the retraction itself unwinds, ending on nu exactly.
// The dilation switch value is found internally unless a positive hint is
// supplied (one bisection per (nu, p, lambda) otherwise).  Raises
// DomainError when (nu, p, s) lies outside the admissible join region.
TestFunctionPair phi_family(const SphereMesh& mesh, const AtomicMeasure& nu,
                            const SurfacePoint& p, double s, double lambda,
                            const ConstantsConfig& config,
                            double s_switch_hint = -1.0);

// --------------------------------------------------------------------------
// Semi-analytic integration
// --------------------------------------------------------------------------

// Polar-cap quadrature resolving the pair's sub-mesh structure: caps at
// the hub and at every peak with radial panels refined at their scales,
// mesh vertices as far field.
Scheme pair_scheme(const SphereMesh& mesh, const TestFunctionPair& pair,
                   int angular_nodes = 64);

struct PairIntegrals {
  double log_mass1 = 0.0;  // log int e^{phi1}
  double log_mass2 = 0.0;  // log int e^{phi2}
  double mean1 = 0.0;      // surface mean of phi1
  double mean2 = 0.0;      // surface mean of phi2
  double q = 0.0;          // int Q(phi1, phi2)
  double dir_v11 = 0.0;    // int |grad v11|^2
  double dir_v12 = 0.0;    // int |grad v12|^2
  double dir_v2 = 0.0;     // int |grad v2|^2
  double cross_11_12 = 0.0;  // int grad v11 . grad v12
  double cross_11_2 = 0.0;   // int grad v11 . grad v2
  double cross_12_2 = 0.0;   // int grad v12 . grad v2

  double mass1() const;  // exp(log_mass1)
  double mass2() const;
  // j = q + rho1 (mean1 - log_mass1) + rho2 (mean2 - log_mass2).
  double j_rho(double rho1, double rho2) const;
};

// Evaluates all integrals of the pair in one pass over the scheme nodes.
PairIntegrals pair_integrals(const SphereMesh& mesh,
                             const TestFunctionPair& pair,
                             int angular_nodes = 64);

// Normalized densities e^{phi_i} / int e^{phi_i} as component measures:
// one radial core per quadrature cap (tabulated from ownership-filtered
// ring averages) plus the mesh far field as background.  Suitable for
// ball-mass queries at the pair's own sub-mesh scales.
std::pair<Density, Density> pair_densities(const SphereMesh& mesh,
                                           const TestFunctionPair& pair);

// The smallest dilation strength at which the blended-scale comparison of
// the two densities lands at join parameter 0 (second field effectively
// diffuse relative to the first).  Geometric bisection over
// [1, 4 tau_tilde / mu^2] to 2% relative accuracy; the returned value
// itself satisfies the parameter-0 predicate.  Raises NumericError with
// the probe trace when the bracket does not switch.
double s_p_nu(const SphereMesh& mesh, const AtomicMeasure& nu,
              const SurfacePoint& p, double lambda, double mu,
              double tau_tilde, const ConstantsConfig& config);

// --------------------------------------------------------------------------
// Energy sweeps
// --------------------------------------------------------------------------

struct EnergyRow {
  int nu_id = 0;  // index of the (nu, p) pair in the sweep input
  SurfacePoint p;
  double s = 0.0;
  double lambda = 0.0;
  double j = 0.0;          // j_rho of the pair
  double log_mass1 = 0.0;  // log int e^{phi1}
  double log_mass2 = 0.0;
  double q = 0.0;
  double mean1 = 0.0;
  double mean2 = 0.0;
};

// Synthesizes the family on the cartesian grid (paired nus/ps) x s_values
// x lambdas and records the semi-analytic energies.  Dilation switch
// values are computed once per (pair, lambda) and shared; rows are
// evaluated in parallel and returned in deterministic grid order.
std::vector<EnergyRow> energy_sweep(const SphereMesh& mesh,
                                    const std::vector<AtomicMeasure>& nus,
                                    const std::vector<SurfacePoint>& ps,
                                    const std::vector<double>& s_values,
                                    const std::vector<double>& lambdas,
                                    const RhoParams& rho,
                                    const ConstantsConfig& config);

}  // namespace toda
