// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0
//
// Finitely supported probability measures on the sphere and the maps that
// organize them: the Kantorovich-Rubinstein (W1) distance, projections onto
// few-atom configurations, a merging flow that removes one atom, a retraction
// that clears the neighborhood of a marked point, and the deformation of
// join elements (measure, point, interpolation weight) onto the region where
// low-energy test functions can be built.
#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "todasphere/common.hpp"
#include "todasphere/constants.hpp"
#include "todasphere/density.hpp"
#include "todasphere/mesh.hpp"

namespace toda {

// Generic weighted point cloud (weights positive, ideally summing to 1).
// Used as the common currency between densities and atomic measures when
// computing transport distances.
using WeightedCloud = std::vector<std::pair<SurfacePoint, double>>;

struct Atom {
  SurfacePoint point;
  double weight = 0.0;
};

// Probability measure supported on finitely many points.  The constructor
// validates nonnegative weights summing to 1 within 1e-12.  Atoms are kept
// exactly as given (duplicates included); canonical() merges coincident
// atoms and drops zero weights.
class AtomicMeasure {
 public:
  explicit AtomicMeasure(std::vector<Atom> atoms);
  static AtomicMeasure dirac(const SurfacePoint& x);

  const std::vector<Atom>& atoms() const { return atoms_; }
  const Atom& atom(int i) const { return atoms_[static_cast<size_t>(i)]; }
  int size() const { return static_cast<int>(atoms_.size()); }

  // Merges atoms whose supports coincide within merge_tol (weights summed)
  // and drops atoms of zero weight.  Order of first appearance is kept.
  AtomicMeasure canonical(double merge_tol = 1e-12) const;

  // Geodesic distance from x to the closest support point.
  double support_distance(const SurfacePoint& x) const;

  WeightedCloud cloud() const;

 private:
  std::vector<Atom> atoms_;
};

// Element of the join of k-atom measures with single points: a measure nu,
// a point z, and an interpolation weight s in [0,1].  At s = 0 the element
// is identified with nu alone, at s = 1 with z alone.
struct JoinElement {
  AtomicMeasure nu;
  SurfacePoint z;
  double s = 0.5;

  JoinElement(AtomicMeasure nu_in, const SurfacePoint& z_in, double s_in);
};

// Maximum edge length of the level-l icosphere (memoized; builds the mesh
// once per level).  Serves as the resolution scale for operations that take
// only a ConstantsConfig.
double icosphere_spacing(int level);

// --------------------------------------------------------------------------
// Kantorovich-Rubinstein distance (optimal transport with geodesic cost).
// Exact on the union of the supports; symmetric; triangle inequality holds
// up to solver round-off.  Inputs must be probability measures (weights
// summing to 1 within 1e-8) or a ConfigError is raised.
// --------------------------------------------------------------------------
double kr_distance(const WeightedCloud& a, const WeightedCloud& b);
double kr_distance(const AtomicMeasure& a, const AtomicMeasure& b);
double kr_distance(const Density& a, const AtomicMeasure& b);
double kr_distance(const AtomicMeasure& a, const Density& b);
double kr_distance(const Density& a, const Density& b);

// --------------------------------------------------------------------------
// Configuration diagnostics.
// --------------------------------------------------------------------------

// Smallest of all pairwise support distances and all weight margins
// min(w, 1-w).  Zero for a single atom (its margin vanishes).
double d_of_nu(const AtomicMeasure& nu);

// Transport distance from nu to the nearest measure with one atom fewer:
// the cheapest pair merge min(w_i, w_j) * d(x_i, x_j).  Infinite when nu
// has fewer than two distinct atoms.
double distance_to_fewer_atoms(const AtomicMeasure& nu);

// Repulsion functional on k-atom configurations: sum over ordered pairs of
// F0(d(x_i, x_j)) plus sum of 1/(w_i (1 - w_i)), where F0(t) = 1/t below
// delta1, 1/(2 delta1) above 2 delta1, linear between.  Returns +infinity
// for coincident atoms or weights at 0 or 1.
double f_functional(const AtomicMeasure& nu, const ConstantsConfig& config);

// --------------------------------------------------------------------------
// Atom-removing flow.  Follows the positive gradient flow of f_functional,
// reparametrized so t in [0,1] spans the whole trajectory: t = 0 is the
// identity, t = 1 has merged two atoms or extinguished one weight.  Atoms
// closer than one mesh spacing merge immediately (the functional is treated
// as infinite there).  Measures that are already degenerate (a duplicate
// atom or a zero weight) are fixed points.  Raises NumericError when the
// flow cannot reach a degeneration within the step budget (e.g. perfectly
// balanced weights with no close pair).
// --------------------------------------------------------------------------
AtomicMeasure h0_flow(const AtomicMeasure& nu, double t,
                      const ConstantsConfig& config);

// --------------------------------------------------------------------------
// Retraction clearing the neighborhood of a marked point p.  Output always
// satisfies the membership predicate below.  Raises DomainError when p lies
// in the support of a non-degenerate input.
// --------------------------------------------------------------------------
AtomicMeasure r_p_retract(const AtomicMeasure& nu, const SurfacePoint& p,
                          const ConstantsConfig& config);

// Membership predicate for the target set of r_p_retract with ambient atom
// count k: either every atom is at distance >= 1/tau_bar from p, or at most
// max(k-2, 0) atoms lie strictly farther from p than the closest one.
bool sigma_kp_member(const AtomicMeasure& nu, const SurfacePoint& p,
                     int ambient_k, const ConstantsConfig& config);

// Collapse stage of r_p_retract alone (no merging flow, no radial push),
// with a homotopy parameter: unwind = 0 applies the full collapse, unwind=1
// is the identity, intermediate values interpolate positions along geodesics
// and weights linearly.  Atom correspondence is preserved.  Used to build
// test-function families that unwind the retraction continuously.
AtomicMeasure r_p_collapse(const AtomicMeasure& nu, const SurfacePoint& p,
                           const ConstantsConfig& config, double unwind = 0.0);

// --------------------------------------------------------------------------
// Join-element deformation onto the target region
//   Y_R = {D(nu) <= delta} u {d(z, supp nu) >= delta2} u {s in {0,1}},
// where D = d_of_nu.  Identity on Y_R; raises DomainError on the excluded
// set S (s = 1/2, D(nu) >= delta, z on the support).
// --------------------------------------------------------------------------
JoinElement retract_to_YR(const JoinElement& el, const ConstantsConfig& config);

bool in_S(const JoinElement& el, const ConstantsConfig& config);
bool in_Y_R(const JoinElement& el, const ConstantsConfig& config);

// --------------------------------------------------------------------------
// Projection onto k-atom measures: weighted k-medoids seeded by
// farthest-point sampling on the high-density region, refined by Lloyd
// iterations with geodesic-median center updates.  Idempotent on inputs
// that already have at most k atoms.  Raises DomainError when the best
// achievable transport distance exceeds 2 * eps(k).
// --------------------------------------------------------------------------
AtomicMeasure project_psi_k(const WeightedCloud& cloud, int k,
                            const ConstantsConfig& config);
AtomicMeasure project_psi_k(const SphereMesh& mesh,
                            const Eigen::VectorXd& density, int k,
                            const ConstantsConfig& config);
AtomicMeasure project_psi_k(const Density& density, int k,
                            const ConstantsConfig& config);

// Transport distance to the best k-atom approximation found by the same
// search, without the 2 * eps(k) admissibility gate.  An operative upper
// bound for the distance to the k-atom stratum.
double distance_to_atomic(const WeightedCloud& cloud, int k,
                          const ConstantsConfig& config);
double distance_to_atomic(const SphereMesh& mesh,
                          const Eigen::VectorXd& density, int k,
                          const ConstantsConfig& config);
double distance_to_atomic(const Density& density, int k,
                          const ConstantsConfig& config);

// --------------------------------------------------------------------------
// Mass-separation witnesses: l points, pairwise more than 2 eps_prime
// apart, each owning ball mass above eps_prime.  The radius eps_prime is
// chosen by the search (the configured ladder value is tried first) and
// reported with the points.  Returns nullopt when no radius admits such a
// family (the density is effectively concentrated at fewer than l sites).
// --------------------------------------------------------------------------
struct SeparatedPoints {
  std::vector<SurfacePoint> points;
  double eps_prime = 0.0;
};

std::optional<SeparatedPoints> separated_points(const SphereMesh& mesh,
                                                const Eigen::VectorXd& density,
                                                int l, double eps,
                                                const ConstantsConfig& config);
std::optional<SeparatedPoints> separated_points(const Density& density, int l,
                                                double eps,
                                                const ConstantsConfig& config);

}  // namespace toda
