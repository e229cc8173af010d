// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0

#include "todasphere/testfn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "todasphere/radial.hpp"

namespace toda {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCoincident = 1e-13;  // centers below this merge

// ---------------------------------------------------------------------------
// Peak term: g(d) = max{0, -4 (log_c + log max{d, r_in})}.  The peak is
// flat (identically zero) when log_c = +inf, the degenerate limit of an
// atom sitting exactly at the marked point.
// ---------------------------------------------------------------------------

double peak_log_term(const PairRecipe::Peak& peak, double d) {
  if (!std::isfinite(peak.log_c)) return 0.0;
  const double raw = -4.0 * (peak.log_c + std::log(std::max(d, peak.r_in)));
  return std::max(0.0, raw);
}

bool peak_active(const PairRecipe::Peak& peak, double d) {
  return std::isfinite(peak.log_c) && d > peak.r_in &&
         peak.log_c + std::log(d) < 0.0;
}

// Unit tangent at x pointing away from c; zero when x is at c.
Vec3 radial_dir(const SurfacePoint& x, const SurfacePoint& c, double d) {
  if (d < kCoincident) return Vec3::Zero();
  return -log_map(x, c) / d;
}

// All component values and gradients at x in one pass over the peaks.
struct Eval {
  double v11 = 0.0, v12 = 0.0, v2 = 0.0;
  Vec3 g11 = Vec3::Zero(), g12 = Vec3::Zero(), g2 = Vec3::Zero();
};

Eval eval_components(const PairRecipe& r, const SurfacePoint& x) {
  Eval e;
  if (r.a_peaks != 0.0 && !r.peaks.empty()) {
    double m = -kInf;
    std::vector<double> g(r.peaks.size());
    std::vector<double> dist(r.peaks.size());
    for (size_t i = 0; i < r.peaks.size(); ++i) {
      dist[i] = geodesic_distance(x, r.peaks[i].y);
      g[i] = peak_log_term(r.peaks[i], dist[i]);
      m = std::max(m, g[i]);
    }
    double den = 0.0;
    Vec3 num = Vec3::Zero();
    for (size_t i = 0; i < r.peaks.size(); ++i) {
      const double q = r.peaks[i].w * std::exp(g[i] - m);
      den += q;
      if (peak_active(r.peaks[i], dist[i])) {
        num += q * (-4.0 / dist[i]) * radial_dir(x, r.peaks[i].y, dist[i]);
      }
    }
    e.v11 = r.a_peaks * (m + std::log(den));
    e.g11 = r.a_peaks * (num / den);
  }
  if (r.b_hub != 0.0) {
    const double d = geodesic_distance(x, r.p);
    const double inv2 = 1.0 / (r.hub_scale * r.hub_scale);
    e.v12 = r.b_hub * (-3.0 * std::log(inv2 + d * d));
    e.g12 = r.b_hub * (-6.0 * d / (inv2 + d * d)) * radial_dir(x, r.p, d);
  }
  if (r.c_ring != 0.0) {
    const double d = geodesic_distance(x, r.p);
    const double t = std::clamp(d, r.ring_inner, r.ring_outer);
    e.v2 = r.c_ring * (-4.0 * std::log(t / r.ring_outer));
    if (d > r.ring_inner && d < r.ring_outer) {
      e.g2 = r.c_ring * (-4.0 / d) * radial_dir(x, r.p, d);
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// Recipe construction
// ---------------------------------------------------------------------------

// Complementary scale-parameter product s_i * lambda_i along the peak
// unwinding: at t = 1 it matches the base configuration exactly, at t = 0
// every atom carries the same product s_hat * lambda_check.
double s_i_lambda_i_t(const BubbleParams& bp, const BubbleAtom& a, double t) {
  if (!(a.d > 1.0 / bp.tau_lambda)) return a.s_i * bp.lambda_check;
  return std::exp((1.0 + t) * std::log(bp.s_hat) + std::log(bp.lambda_check) +
                  t * (std::log(bp.tau_lambda) + std::log(a.d_tilde)));
}

PairRecipe base_recipe(const BubbleParams& bp) {
  PairRecipe r;
  r.p = bp.p;
  r.hub_scale = bp.s_hat * bp.tau_lambda;
  r.ring_inner = 1.0 / (bp.s_hat * bp.tau_tilde);
  r.ring_outer = 1.0 / (bp.s_hat * bp.mu);
  r.ring_top = 4.0 * std::log(bp.tau_tilde / bp.mu);
  r.peaks.reserve(bp.atoms.size());
  for (const BubbleAtom& a : bp.atoms) {
    PairRecipe::Peak pk;
    pk.y = a.x_tilde;
    pk.w = a.weight;
    pk.log_c = std::log(4.0) - std::log(a.d_tilde);  // +inf at d_tilde = 0
    pk.scale = a.s_i * a.lambda_i;
    pk.r_in = 1.0 / pk.scale;
    r.peaks.push_back(pk);
  }
  return r;
}

// Peak set of the unwinding stage: sharpness factors relax as c^t and the
// scale products follow s_i_lambda_i_t.
void unwind_peaks(PairRecipe& r, const BubbleParams& bp, double t) {
  for (size_t i = 0; i < r.peaks.size(); ++i) {
    const BubbleAtom& a = bp.atoms[i];
    PairRecipe::Peak& pk = r.peaks[i];
    const double logc1 = std::log(4.0) - std::log(a.d_tilde);
    pk.log_c = t == 0.0 ? 0.0 : t * logc1;
    pk.scale = s_i_lambda_i_t(bp, a, t);
    pk.r_in = 1.0 / pk.scale;
  }
}

// Greedy transport plan between two atomic measures: pairs sorted by
// distance, each allocating as much mass as both ends still carry.
struct PlanCell {
  SurfacePoint src, dst;
  double w = 0.0;
  int src_index = 0;
};

std::vector<PlanCell> greedy_plan(const AtomicMeasure& from,
                                  const AtomicMeasure& to) {
  struct Pair {
    double d;
    int j, i;
  };
  std::vector<Pair> order;
  order.reserve(static_cast<size_t>(from.size()) * to.size());
  for (int j = 0; j < from.size(); ++j) {
    for (int i = 0; i < to.size(); ++i) {
      order.push_back(
          {geodesic_distance(from.atom(j).point, to.atom(i).point), j, i});
    }
  }
  std::sort(order.begin(), order.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.d, a.j, a.i) < std::tie(b.d, b.j, b.i);
  });
  std::vector<double> rem_s(from.size()), rem_t(to.size());
  for (int j = 0; j < from.size(); ++j) rem_s[j] = from.atom(j).weight;
  for (int i = 0; i < to.size(); ++i) rem_t[i] = to.atom(i).weight;
  std::vector<PlanCell> cells;
  for (const Pair& pr : order) {
    const double m = std::min(rem_s[pr.j], rem_t[pr.i]);
    if (m > 1e-15) {
      cells.push_back({from.atom(pr.j).point, to.atom(pr.i).point, m, pr.j});
      rem_s[pr.j] -= m;
      rem_t[pr.i] -= m;
    }
  }
  return cells;
}

Eigen::VectorXd sample(const SphereMesh& mesh,
                       const std::function<double(const SurfacePoint&)>& f) {
  Eigen::VectorXd out(mesh.vertex_count());
  for (int i = 0; i < mesh.vertex_count(); ++i) out[i] = f(mesh.vertex(i));
  return out;
}

TestFunctionPair assemble(const SphereMesh& mesh, BubbleParams params,
                          PairRecipe recipe) {
  TestFunctionPair pair;
  pair.params = std::move(params);
  pair.recipe = std::move(recipe);
  const int n = mesh.vertex_count();
  pair.v11.resize(n);
  pair.v12.resize(n);
  pair.v2.resize(n);
  pair.phi1.resize(n);
  pair.phi2.resize(n);
  for (int i = 0; i < n; ++i) {
    const Eval e = eval_components(pair.recipe, mesh.vertex(i));
    pair.v11[i] = e.v11;
    pair.v12[i] = e.v12;
    pair.v2[i] = e.v2;
    pair.phi1[i] = e.v11 + e.v12 - 0.5 * e.v2;
    pair.phi2[i] = -0.5 * e.v11 + e.v2;
  }
  return pair;
}

// Runs fn(i) for i in [0, n) on a small worker pool; first exception wins.
void parallel_for(int n, const std::function<void(int)>& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = std::min<unsigned>(hw, static_cast<unsigned>(n));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

// ---------------------------------------------------------------------------
// Simple peak fields
// ---------------------------------------------------------------------------

Eigen::VectorXd regular_bubble(const SphereMesh& mesh, double lam,
                               const SurfacePoint& z) {
  if (!(lam >= 1.0)) throw ConfigError("regular_bubble: lambda must be >= 1");
  return sample(mesh, [&](const SurfacePoint& x) {
    return bubble_log_profile(lam, geodesic_distance(x, z));
  });
}

Eigen::VectorXd standard_family(const SphereMesh& mesh, double lam,
                                const AtomicMeasure& nu) {
  if (!(lam >= 1.0)) throw ConfigError("standard_family: lambda must be >= 1");
  return sample(mesh, [&](const SurfacePoint& x) {
    double m = -kInf;
    std::vector<double> vals(static_cast<size_t>(nu.size()));
    for (int i = 0; i < nu.size(); ++i) {
      vals[static_cast<size_t>(i)] =
          bubble_log_profile(lam, geodesic_distance(x, nu.atom(i).point));
      m = std::max(m, vals[static_cast<size_t>(i)]);
    }
    double acc = 0.0;
    for (int i = 0; i < nu.size(); ++i) {
      acc += nu.atom(i).weight * std::exp(vals[static_cast<size_t>(i)] - m);
    }
    return m + std::log(acc);
  });
}

// ---------------------------------------------------------------------------
// Parameter block
// ---------------------------------------------------------------------------

double p_hat_ramp(double t, const ConstantsConfig& config) {
  if (!(t > 0.0)) throw ConfigError("p_hat_ramp: argument must be positive");
  if (t <= config.tau1) return 1.0;
  if (t >= 2.0 * config.tau1) return config.ramp_cap;
  const double ratio = (t - config.tau1) / (2.0 * config.tau1 - t);
  return std::min(config.ramp_cap,
                  std::exp(ratio * std::log(config.ramp_cap)));
}

double p_check_ramp(double t, const ConstantsConfig& config) {
  if (!(t > 0.0)) throw ConfigError("p_check_ramp: argument must be positive");
  if (t >= 4.0 * config.tau1) return 1.0;
  if (t <= 2.0 * config.tau1) return config.ramp_cap;
  const double ratio = (4.0 * config.tau1 - t) / (t - 2.0 * config.tau1);
  return std::min(config.ramp_cap,
                  std::exp(ratio * std::log(config.ramp_cap)));
}

BubbleParams bubble_params(const AtomicMeasure& nu, const SurfacePoint& p,
                           double s_frak, double lambda, double mu,
                           double tau_tilde, const ConstantsConfig& config) {
  config.validate();
  if (!(s_frak >= 1.0) || !std::isfinite(s_frak)) {
    throw ConfigError("bubble_params: dilation strength must be >= 1");
  }
  if (!(lambda >= 1.0) || !(mu >= 2.0 * lambda) || !(tau_tilde >= 2.0 * mu)) {
    throw ConfigError(
        "bubble_params: scales must satisfy tau_tilde >= 2 mu >= 4 lambda "
        ">= 4");
  }
  BubbleParams bp;
  bp.nu_hat = r_p_retract(nu, p, config);
  bp.p = p;
  bp.s_frak = s_frak;
  bp.lambda = lambda;
  bp.mu = mu;
  bp.tau_tilde = tau_tilde;

  // Concentration of the retracted mass near p: inverse weighted mean
  // distance under the complementary near cutoff, with the continuous
  // empty limit 1 / (2 delta2).
  double wsum = 0.0;
  double dsum = 0.0;
  for (const Atom& a : bp.nu_hat.atoms()) {
    const double d = geodesic_distance(a.point, p);
    const double w =
        a.weight * ramp_down(d, config.delta2, 2.0 * config.delta2);
    wsum += w;
    dsum += w * d;
  }
  if (wsum == 0.0) {
    bp.tau = 1.0 / (2.0 * config.delta2);
  } else {
    const double mean = dsum / wsum;
    bp.tau = mean > 0.0 ? 1.0 / mean : kInf;
  }
  bp.tau_lambda = std::min(bp.tau, lambda);
  bp.s_hat = bp.tau < 2.0 * config.tau1
                 ? std::min(s_frak, p_hat_ramp(bp.tau, config))
                 : s_frak;
  bp.s_check = bp.tau <= 2.0 * config.tau1
                   ? s_frak
                   : std::min(s_frak, p_check_ramp(bp.tau, config));
  bp.lambda_check = bp.s_check * lambda;

  for (const Atom& a : bp.nu_hat.atoms()) {
    BubbleAtom ba;
    ba.x = a.point;
    ba.weight = a.weight;
    ba.d = geodesic_distance(a.point, p);
    ba.s_tilde = std::pow(
        bp.s_hat, ramp_down(ba.d, config.delta_bar, 2.0 * config.delta_bar));
    ba.x_tilde =
        ba.d == 0.0 ? p : exp_map(p, log_map(p, a.point) / ba.s_tilde);
    ba.d_tilde = ba.d / ba.s_tilde;
    ba.lambda_i = ba.d > 1.0 / bp.tau_lambda
                      ? ba.d * bp.tau_lambda * bp.lambda_check
                      : bp.lambda_check;
    ba.s_i = bp.s_hat * bp.s_hat / ba.s_tilde;
    ba.detached = ba.d > 4.0 / ba.lambda_i;
    ba.on_plateau = ba.d <= 1.0 / bp.tau_lambda;
    const int idx = static_cast<int>(bp.atoms.size());
    if (ba.detached) {
      bp.detached.push_back(idx);
      (ba.on_plateau ? bp.detached_inner : bp.detached_outer).push_back(idx);
    }
    bp.atoms.push_back(ba);
  }
  return bp;
}

// ---------------------------------------------------------------------------
// Pair synthesis
// ---------------------------------------------------------------------------

double TestFunctionPair::v11_at(const SurfacePoint& x) const {
  return eval_components(recipe, x).v11;
}
double TestFunctionPair::v12_at(const SurfacePoint& x) const {
  return eval_components(recipe, x).v12;
}
double TestFunctionPair::v2_at(const SurfacePoint& x) const {
  return eval_components(recipe, x).v2;
}
double TestFunctionPair::phi1_at(const SurfacePoint& x) const {
  const Eval e = eval_components(recipe, x);
  return e.v11 + e.v12 - 0.5 * e.v2;
}
double TestFunctionPair::phi2_at(const SurfacePoint& x) const {
  const Eval e = eval_components(recipe, x);
  return -0.5 * e.v11 + e.v2;
}
Vec3 TestFunctionPair::grad_v11_at(const SurfacePoint& x) const {
  return eval_components(recipe, x).g11;
}
Vec3 TestFunctionPair::grad_v12_at(const SurfacePoint& x) const {
  return eval_components(recipe, x).g12;
}
Vec3 TestFunctionPair::grad_v2_at(const SurfacePoint& x) const {
  return eval_components(recipe, x).g2;
}
Vec3 TestFunctionPair::grad_phi1_at(const SurfacePoint& x) const {
  const Eval e = eval_components(recipe, x);
  return e.g11 + e.g12 - 0.5 * e.g2;
}
Vec3 TestFunctionPair::grad_phi2_at(const SurfacePoint& x) const {
  const Eval e = eval_components(recipe, x);
  return -0.5 * e.g11 + e.g2;
}

TestFunctionPair phi_pair(const SphereMesh& mesh, const BubbleParams& params) {
  return assemble(mesh, params, base_recipe(params));
}

TestFunctionPair phi_family(const SphereMesh& mesh, const AtomicMeasure& nu,
                            const SurfacePoint& p, double s, double lambda,
                            const ConstantsConfig& config,
                            double s_switch_hint) {
  const JoinElement el(nu, p, s);  // validates s in [0, 1]
  if (!in_Y_R(el, config)) {
    throw DomainError(
        "phi_family: join element outside the admissible region");
  }
  const double mu = config.mu_of(lambda);
  const double tt = config.tau_tilde_of(lambda);

  if (s >= 0.75) {
    const double t = 4.0 * (1.0 - s);
    BubbleParams bp = bubble_params(nu, p, 1.0, lambda, mu, tt, config);
    PairRecipe recipe = base_recipe(bp);
    recipe.a_peaks = t;
    recipe.b_hub = t;
    return assemble(mesh, std::move(bp), std::move(recipe));
  }

  const double s_switch =
      s_switch_hint > 0.0 ? s_switch_hint
                          : s_p_nu(mesh, nu, p, lambda, mu, tt, config);

  if (s >= 0.25) {
    const double sf = 2.0 * (1.0 - s_switch) * s + 1.5 * s_switch - 0.5;
    BubbleParams bp = bubble_params(nu, p, sf, lambda, mu, tt, config);
    return assemble(mesh, bp, base_recipe(bp));
  }

  BubbleParams bp = bubble_params(nu, p, s_switch, lambda, mu, tt, config);
  if (s >= 3.0 / 16.0) {
    const double t = 16.0 * (s - 3.0 / 16.0);
    PairRecipe recipe = base_recipe(bp);
    recipe.c_ring = t;
    return assemble(mesh, std::move(bp), std::move(recipe));
  }
  if (s >= 1.0 / 8.0) {
    const double t = 16.0 * (s - 1.0 / 8.0);
    PairRecipe recipe = base_recipe(bp);
    unwind_peaks(recipe, bp, t);
    recipe.b_hub = t;
    recipe.c_ring = 0.0;
    return assemble(mesh, std::move(bp), std::move(recipe));
  }
  if (s >= 1.0 / 16.0) {
    const double t = 16.0 * (1.0 / 8.0 - s);  // 0 -> 1 as s: 1/8 -> 1/16
    PairRecipe recipe = base_recipe(bp);
    unwind_peaks(recipe, bp, 0.0);
    for (size_t i = 0; i < recipe.peaks.size(); ++i) {
      const BubbleAtom& a = bp.atoms[i];
      recipe.peaks[i].y = geodesic_point(a.x_tilde, a.x, t);
    }
    recipe.b_hub = 0.0;
    recipe.c_ring = 0.0;
    return assemble(mesh, std::move(bp), std::move(recipe));
  }

  const double t = 16.0 * (1.0 / 16.0 - s);
  PairRecipe recipe = base_recipe(bp);
  unwind_peaks(recipe, bp, 0.0);
  const std::vector<PlanCell> cells = greedy_plan(bp.nu_hat, nu);
  std::vector<PairRecipe::Peak> peaks;
  peaks.reserve(cells.size());
  for (const PlanCell& c : cells) {
    PairRecipe::Peak pk = recipe.peaks[static_cast<size_t>(c.src_index)];
    pk.y = geodesic_point(c.src, c.dst, t);
    pk.w = c.w;
    peaks.push_back(pk);
  }
  recipe.peaks = std::move(peaks);
  recipe.b_hub = 0.0;
  recipe.c_ring = 0.0;
  return assemble(mesh, std::move(bp), std::move(recipe));
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

namespace {

// Cap layout around the pair: an inner cap at the marked point owning the
// hub/ring micro-structure, one cap per peak, and an outer collar at the
// marked point bridging sub-mesh peak surroundings to the mesh far field.
std::vector<Cap> pair_caps(const TestFunctionPair& pair) {
  const PairRecipe& r = pair.recipe;
  const double collar_radius = 0.12;
  std::vector<Cap> caps;

  std::vector<double> hub_scales;
  if (r.c_ring != 0.0) {
    hub_scales.push_back(r.ring_inner);
    hub_scales.push_back(r.ring_outer);
  }
  if (r.b_hub != 0.0) hub_scales.push_back(1.0 / r.hub_scale);

  // Positive distances from the marked point to the peaks.
  double min_peak_d = kInf;
  for (const auto& pk : r.peaks) {
    const double d = geodesic_distance(pk.y, r.p);
    if (d > kCoincident) min_peak_d = std::min(min_peak_d, d);
  }

  Cap collar;
  collar.center = r.p;
  collar.radius = collar_radius;
  collar.scales = hub_scales;
  for (const auto& pk : r.peaks) {
    const double d = geodesic_distance(pk.y, r.p);
    if (d > kCoincident && d < collar_radius) collar.scales.push_back(d);
  }

  if (std::isfinite(min_peak_d) && 0.4 * min_peak_d < collar_radius) {
    Cap inner;
    inner.center = r.p;
    inner.radius = std::max(0.4 * min_peak_d, 1e-12);
    inner.scales = hub_scales;
    caps.push_back(std::move(inner));
  }

  for (size_t i = 0; i < r.peaks.size(); ++i) {
    const auto& pk = r.peaks[i];
    const double dp = geodesic_distance(pk.y, r.p);
    if (dp <= kCoincident) continue;  // merged with the marked point
    double min_d = dp;
    bool duplicate = false;
    for (size_t j = 0; j < r.peaks.size(); ++j) {
      if (j == i) continue;
      const double d = geodesic_distance(pk.y, r.peaks[j].y);
      if (d <= kCoincident) {
        duplicate = j < i;  // the first of a merged group keeps the cap
        continue;
      }
      min_d = std::min(min_d, d);
    }
    if (duplicate) continue;
    Cap cap;
    cap.center = pk.y;
    cap.radius = std::min(0.10, std::max(0.45 * min_d, 4.0 * pk.r_in));
    cap.scales.push_back(pk.r_in);
    const double knee = std::exp(-pk.log_c);  // active zone ends here
    if (std::isfinite(knee)) cap.scales.push_back(knee);
    caps.push_back(std::move(cap));
  }
  caps.push_back(std::move(collar));
  for (Cap& cap : caps) {
    std::vector<double> kept;
    for (double s : cap.scales) {
      if (s > 0.0 && s < cap.radius && std::isfinite(s)) kept.push_back(s);
    }
    std::sort(kept.begin(), kept.end());
    kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
    cap.scales = std::move(kept);
  }
  return caps;
}

}  // namespace

Scheme pair_scheme(const SphereMesh& mesh, const TestFunctionPair& pair,
                   int angular_nodes) {
  return build_scheme(&mesh, pair_caps(pair), angular_nodes);
}

double PairIntegrals::mass1() const { return std::exp(log_mass1); }
double PairIntegrals::mass2() const { return std::exp(log_mass2); }
double PairIntegrals::j_rho(double rho1, double rho2) const {
  return q + rho1 * (mean1 - log_mass1) + rho2 * (mean2 - log_mass2);
}

PairIntegrals pair_integrals(const SphereMesh& mesh,
                             const TestFunctionPair& pair, int angular_nodes) {
  const Scheme scheme = pair_scheme(mesh, pair, angular_nodes);
  const size_t n = scheme.nodes.size();
  std::vector<double> f1(n), f2(n);
  PairIntegrals out;
  double m1 = -kInf;
  double m2 = -kInf;
  for (size_t i = 0; i < n; ++i) {
    const auto& node = scheme.nodes[i];
    const Eval e = eval_components(pair.recipe, node.x);
    const double p1 = e.v11 + e.v12 - 0.5 * e.v2;
    const double p2 = -0.5 * e.v11 + e.v2;
    f1[i] = p1;
    f2[i] = p2;
    m1 = std::max(m1, p1);
    m2 = std::max(m2, p2);
    out.mean1 += node.w * p1;
    out.mean2 += node.w * p2;
    out.dir_v11 += node.w * e.g11.squaredNorm();
    out.dir_v12 += node.w * e.g12.squaredNorm();
    out.dir_v2 += node.w * e.g2.squaredNorm();
    out.cross_11_12 += node.w * e.g11.dot(e.g12);
    out.cross_11_2 += node.w * e.g11.dot(e.g2);
    out.cross_12_2 += node.w * e.g12.dot(e.g2);
    const Vec3 gp1 = e.g11 + e.g12 - 0.5 * e.g2;
    const Vec3 gp2 = -0.5 * e.g11 + e.g2;
    out.q += node.w * (gp1.squaredNorm() + gp2.squaredNorm() + gp1.dot(gp2)) /
             3.0;
  }
  if (!std::isfinite(m1) || !std::isfinite(m2)) {
    throw NumericError("pair_integrals: field values not finite");
  }
  double acc1 = 0.0;
  double acc2 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    acc1 += scheme.nodes[i].w * std::exp(f1[i] - m1);
    acc2 += scheme.nodes[i].w * std::exp(f2[i] - m2);
  }
  out.log_mass1 = m1 + std::log(acc1);
  out.log_mass2 = m2 + std::log(acc2);
  return out;
}

std::pair<Density, Density> pair_densities(const SphereMesh& mesh,
                                           const TestFunctionPair& pair) {
  std::vector<Cap> caps = pair_caps(pair);
  std::stable_sort(caps.begin(), caps.end(),
                   [](const Cap& a, const Cap& b) { return a.radius < b.radius; });
  const int n_ang = 64;
  Density f1;
  Density f2;
  // Ring averages of both exponentials, filtered to the part of the ring
  // each cap owns (smaller caps take precedence, as in the node scheme).
  for (size_t k = 0; k < caps.size(); ++k) {
    const Cap& cap = caps[k];
    const auto basis = tangent_basis(cap.center);
    const auto ring_mean = [&](double rho, bool first) {
      double acc = 0.0;
      for (int j = 0; j < n_ang; ++j) {
        const double theta = 2.0 * std::numbers::pi * (j + 0.5) / n_ang;
        const Vec3 dir =
            std::cos(theta) * basis[0] + std::sin(theta) * basis[1];
        const SurfacePoint x = exp_map(cap.center, rho * dir);
        bool owned = true;
        for (size_t i = 0; i < k; ++i) {
          if (geodesic_distance(x, caps[i].center) < caps[i].radius) {
            owned = false;
            break;
          }
        }
        if (!owned) continue;
        const Eval e = eval_components(pair.recipe, x);
        acc += std::exp(first ? e.v11 + e.v12 - 0.5 * e.v2
                              : -0.5 * e.v11 + e.v2);
      }
      return acc / n_ang;
    };
    for (int field = 0; field < 2; ++field) {
      const bool first = field == 0;
      TabulatedCDF cdf = TabulatedCDF::build(
          [&](double rho) { return ring_mean(rho, first) * ring_length(rho); },
          cap.scales, cap.radius);
      if (cdf.total() <= 0.0) continue;
      Density::Core core;
      core.center = cap.center;
      core.mass = cdf.total();
      core.cdf = std::move(cdf);
      (first ? f1 : f2).add_core(std::move(core));
    }
  }
  Eigen::VectorXd bg1 = Eigen::VectorXd::Zero(mesh.vertex_count());
  Eigen::VectorXd bg2 = Eigen::VectorXd::Zero(mesh.vertex_count());
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const SurfacePoint& v = mesh.vertex(i);
    bool outside = true;
    for (const Cap& cap : caps) {
      if (geodesic_distance(v, cap.center) < cap.radius) {
        outside = false;
        break;
      }
    }
    if (!outside) continue;
    const Eval e = eval_components(pair.recipe, v);
    const double w = mesh.quad_weights()[i];
    bg1[i] = w * std::exp(e.v11 + e.v12 - 0.5 * e.v2);
    bg2[i] = w * std::exp(-0.5 * e.v11 + e.v2);
  }
  f1.set_background(&mesh, std::move(bg1));
  f2.set_background(&mesh, std::move(bg2));
  return {f1.normalized(), f2.normalized()};
}

double s_p_nu(const SphereMesh& mesh, const AtomicMeasure& nu,
              const SurfacePoint& p, double lambda, double mu,
              double tau_tilde, const ConstantsConfig& config) {
  const int k = nu.size();
  std::ostringstream trace;
  const auto lands_at_zero = [&](double s_frak) {
    const BubbleParams bp =
        bubble_params(nu, p, s_frak, lambda, mu, tau_tilde, config);
    const TestFunctionPair pair = phi_pair(mesh, bp);
    const auto [f1, f2] = pair_densities(mesh, pair);
    const GlobalScales gs = global_scales(f1, f2, k, config);
    trace << " (" << s_frak << " -> " << gs.s << ")";
    return gs.s == 0.0;
  };
  if (lands_at_zero(1.0)) return 1.0;
  const double cap = 4.0 * tau_tilde / (mu * mu);
  double lo = 1.0;
  double hi = cap;
  if (!lands_at_zero(hi)) {
    throw NumericError(
        "s_p_nu: join parameter never reached 0 up to the dilation cap " +
        std::to_string(cap) + "; probes:" + trace.str());
  }
  while (hi / lo > 1.02) {
    const double mid = std::sqrt(lo * hi);
    (lands_at_zero(mid) ? hi : lo) = mid;
  }
  return hi;
}

// ---------------------------------------------------------------------------
// Energy sweeps
// ---------------------------------------------------------------------------

std::vector<EnergyRow> energy_sweep(const SphereMesh& mesh,
                                    const std::vector<AtomicMeasure>& nus,
                                    const std::vector<SurfacePoint>& ps,
                                    const std::vector<double>& s_values,
                                    const std::vector<double>& lambdas,
                                    const RhoParams& rho,
                                    const ConstantsConfig& config) {
  if (nus.size() != ps.size()) {
    throw ConfigError("energy_sweep: one marked point per measure required");
  }
  if (rho.h1.size() != 0 || rho.h2.size() != 0) {
    throw ConfigError("energy_sweep: weight functions are fixed to 1");
  }
  const bool need_switch =
      std::any_of(s_values.begin(), s_values.end(),
                  [](double s) { return s < 0.75; });
  const int np = static_cast<int>(nus.size());
  const int nl = static_cast<int>(lambdas.size());

  // Dilation switch values, one per (pair, lambda), shared by all rows.
  std::vector<double> switches(static_cast<size_t>(np * nl), -1.0);
  if (need_switch) {
    parallel_for(np * nl, [&](int cell) {
      const int i = cell / nl;
      const int l = cell % nl;
      const double lambda = lambdas[static_cast<size_t>(l)];
      switches[static_cast<size_t>(cell)] =
          s_p_nu(mesh, nus[static_cast<size_t>(i)], ps[static_cast<size_t>(i)],
                 lambda, config.mu_of(lambda), config.tau_tilde_of(lambda),
                 config);
    });
  }

  const int ns = static_cast<int>(s_values.size());
  std::vector<EnergyRow> rows(static_cast<size_t>(np * ns * nl));
  parallel_for(np * ns * nl, [&](int idx) {
    const int i = idx / (ns * nl);
    const int j = (idx / nl) % ns;
    const int l = idx % nl;
    const double s = s_values[static_cast<size_t>(j)];
    const double lambda = lambdas[static_cast<size_t>(l)];
    const TestFunctionPair pair = phi_family(
        mesh, nus[static_cast<size_t>(i)], ps[static_cast<size_t>(i)], s,
        lambda, config, switches[static_cast<size_t>(i * nl + l)]);
    const PairIntegrals pi = pair_integrals(mesh, pair);
    EnergyRow& row = rows[static_cast<size_t>(idx)];
    row.nu_id = i;
    row.p = ps[static_cast<size_t>(i)];
    row.s = s;
    row.lambda = lambda;
    row.j = pi.j_rho(rho.rho1, rho.rho2);
    row.log_mass1 = pi.log_mass1;
    row.log_mass2 = pi.log_mass2;
    row.q = pi.q;
    row.mean1 = pi.mean1;
    row.mean2 = pi.mean2;
  });
  return rows;
}

}  // namespace toda
