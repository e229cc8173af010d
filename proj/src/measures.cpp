// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0
//
// Finitely supported measures: exact W1 transport, atom projections, the
// atom-removing gradient flow, the marked-point retraction and the
// join-element deformation.  See measures.hpp for the contracts.

#include "todasphere/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <utility>
#include <vector>

namespace toda {

namespace {

constexpr double kWeightSumTol = 1e-12;
constexpr double kCloudSumTol = 1e-8;
constexpr double kCoincidentTol = 1e-12;
constexpr double kTiny = 1e-15;
const double kInf = std::numeric_limits<double>::infinity();

// Largest cost-matrix size the exact transport solver accepts.
constexpr std::int64_t kTransportSizeCap = 8'000'000;

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// AtomicMeasure / JoinElement
// ---------------------------------------------------------------------------

AtomicMeasure::AtomicMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) {
    throw ConfigError("AtomicMeasure: at least one atom required");
  }
  double sum = 0.0;
  for (const Atom& a : atoms_) {
    if (!std::isfinite(a.weight) || a.weight < 0.0) {
      throw ConfigError("AtomicMeasure: weights must be finite and >= 0");
    }
    sum += a.weight;
  }
  if (std::abs(sum - 1.0) > kWeightSumTol) {
    throw ConfigError("AtomicMeasure: weights sum to " + fmt(sum) +
                      ", expected 1 within 1e-12");
  }
}

AtomicMeasure AtomicMeasure::dirac(const SurfacePoint& x) {
  return AtomicMeasure({Atom{x, 1.0}});
}

AtomicMeasure AtomicMeasure::canonical(double merge_tol) const {
  std::vector<Atom> merged;
  for (const Atom& a : atoms_) {
    if (a.weight <= 0.0) continue;
    bool absorbed = false;
    for (Atom& b : merged) {
      if (geodesic_distance(a.point, b.point) <= merge_tol) {
        b.weight += a.weight;
        absorbed = true;
        break;
      }
    }
    if (!absorbed) merged.push_back(a);
  }
  if (merged.empty()) {
    // All weights were zero except rounding; keep the heaviest original atom.
    const Atom* best = &atoms_.front();
    for (const Atom& a : atoms_) {
      if (a.weight > best->weight) best = &a;
    }
    merged.push_back(Atom{best->point, 1.0});
  }
  double sum = 0.0;
  for (const Atom& a : merged) sum += a.weight;
  for (Atom& a : merged) a.weight /= sum;
  return AtomicMeasure(std::move(merged));
}

double AtomicMeasure::support_distance(const SurfacePoint& x) const {
  double best = kInf;
  for (const Atom& a : atoms_) {
    best = std::min(best, geodesic_distance(x, a.point));
  }
  return best;
}

WeightedCloud AtomicMeasure::cloud() const {
  WeightedCloud out;
  out.reserve(atoms_.size());
  for (const Atom& a : atoms_) {
    if (a.weight > 0.0) out.emplace_back(a.point, a.weight);
  }
  return out;
}

JoinElement::JoinElement(AtomicMeasure nu_in, const SurfacePoint& z_in,
                         double s_in)
    : nu(std::move(nu_in)), z(z_in), s(s_in) {
  if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
    throw ConfigError("JoinElement: interpolation weight s must lie in [0,1]");
  }
}

double icosphere_spacing(int level) {
  static std::mutex mu;
  static std::map<int, double> memo;
  std::lock_guard<std::mutex> lock(mu);
  auto it = memo.find(level);
  if (it == memo.end()) {
    it = memo.emplace(level, SphereMesh::build_icosphere(level).spacing())
             .first;
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// Kantorovich-Rubinstein distance: successive-shortest-path min-cost flow
// with Johnson potentials on the bipartite source/sink graph.
// ---------------------------------------------------------------------------

namespace {

struct CleanCloud {
  std::vector<SurfacePoint> points;
  std::vector<double> weights;  // positive, summing to 1
};

CleanCloud clean_cloud(const WeightedCloud& in, const char* side) {
  CleanCloud out;
  double sum = 0.0;
  for (const auto& [pt, w] : in) {
    if (!std::isfinite(w) || w < -kCloudSumTol) {
      throw ConfigError(std::string("kr_distance: ") + side +
                        " has a negative or non-finite weight");
    }
    if (w > 0.0) {
      out.points.push_back(pt);
      out.weights.push_back(w);
    }
    sum += w;
  }
  if (out.points.empty()) {
    throw ConfigError(std::string("kr_distance: ") + side +
                      " carries no positive mass");
  }
  if (std::abs(sum - 1.0) > kCloudSumTol) {
    throw ConfigError(std::string("kr_distance: ") + side +
                      " is not a probability measure (total mass " + fmt(sum) +
                      ")");
  }
  for (double& w : out.weights) w /= sum;
  return out;
}

// Exact transportation cost between two balanced weighted point sets.
double transport_cost(const CleanCloud& src, const CleanCloud& dst) {
  const int n = static_cast<int>(src.points.size());
  const int m = static_cast<int>(dst.points.size());

  // Single-source shortcut: everything travels from one point.
  if (n == 1) {
    double total = 0.0;
    for (int j = 0; j < m; ++j) {
      total += dst.weights[static_cast<size_t>(j)] *
               geodesic_distance(src.points[0], dst.points[static_cast<size_t>(j)]);
    }
    return total;
  }
  if (m == 1) return transport_cost(dst, src);

  if (static_cast<std::int64_t>(n) * m > kTransportSizeCap) {
    throw ConfigError(
        "kr_distance: union support too large for exact transport (" +
        fmt(static_cast<double>(n)) + " x " + fmt(static_cast<double>(m)) +
        " pairs)");
  }

  std::vector<double> cost(static_cast<size_t>(n) * m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      cost[static_cast<size_t>(i) * m + j] =
          geodesic_distance(src.points[static_cast<size_t>(i)],
                            dst.points[static_cast<size_t>(j)]);
    }
  }

  // Node layout: 0 = super-source, 1..n = sources, n+1..n+m = sinks,
  // n+m+1 = super-sink.
  const int S = 0;
  const int T = n + m + 1;
  const int nodes = n + m + 2;
  std::vector<double> pi(static_cast<size_t>(nodes), 0.0);
  std::vector<double> shipped(static_cast<size_t>(n), 0.0);
  std::vector<double> received(static_cast<size_t>(m), 0.0);
  std::unordered_map<std::int64_t, double> flow;  // key i*m+j

  auto flow_at = [&](int i, int j) -> double {
    auto it = flow.find(static_cast<std::int64_t>(i) * m + j);
    return it == flow.end() ? 0.0 : it->second;
  };

  double remaining = 1.0;
  std::vector<double> dist(static_cast<size_t>(nodes));
  std::vector<int> parent(static_cast<size_t>(nodes));

  const int max_rounds = 4 * (n + m) + 16;
  int rounds = 0;
  while (remaining > 1e-12) {
    if (++rounds > max_rounds) {
      throw NumericError("kr_distance: transport solver failed to converge");
    }
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(parent.begin(), parent.end(), -1);
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
    dist[S] = 0.0;
    heap.emplace(0.0, S);
    while (!heap.empty()) {
      auto [du, u] = heap.top();
      heap.pop();
      if (du > dist[static_cast<size_t>(u)] + 1e-18) continue;
      auto relax = [&](int v, double rc) {
        rc = std::max(rc, 0.0);  // guard fp dips in reduced costs
        const double nd = du + rc;
        if (nd < dist[static_cast<size_t>(v)] - 1e-18) {
          dist[static_cast<size_t>(v)] = nd;
          parent[static_cast<size_t>(v)] = u;
          heap.emplace(nd, v);
        }
      };
      if (u == S) {
        for (int i = 0; i < n; ++i) {
          if (src.weights[static_cast<size_t>(i)] - shipped[static_cast<size_t>(i)] >
              1e-14) {
            relax(1 + i, pi[S] - pi[static_cast<size_t>(1 + i)]);
          }
        }
      } else if (u >= 1 && u <= n) {
        const int i = u - 1;
        for (int j = 0; j < m; ++j) {
          relax(n + 1 + j, cost[static_cast<size_t>(i) * m + j] +
                               pi[static_cast<size_t>(u)] -
                               pi[static_cast<size_t>(n + 1 + j)]);
        }
        if (shipped[static_cast<size_t>(i)] > 1e-14) {
          relax(S, pi[static_cast<size_t>(u)] - pi[S]);
        }
      } else if (u >= n + 1 && u <= n + m) {
        const int j = u - n - 1;
        if (dst.weights[static_cast<size_t>(j)] - received[static_cast<size_t>(j)] >
            1e-14) {
          relax(T, pi[static_cast<size_t>(u)] - pi[T]);
        }
        for (int i = 0; i < n; ++i) {
          const double f = flow_at(i, j);
          if (f > 1e-14) {
            relax(1 + i, -cost[static_cast<size_t>(i) * m + j] +
                             pi[static_cast<size_t>(u)] -
                             pi[static_cast<size_t>(1 + i)]);
          }
        }
      } else {  // u == T
        for (int j = 0; j < m; ++j) {
          if (received[static_cast<size_t>(j)] > 1e-14) {
            relax(n + 1 + j, pi[T] - pi[static_cast<size_t>(n + 1 + j)]);
          }
        }
      }
    }
    if (!std::isfinite(dist[static_cast<size_t>(T)])) {
      throw NumericError("kr_distance: transport network disconnected");
    }
    for (int v = 0; v < nodes; ++v) {
      pi[static_cast<size_t>(v)] +=
          std::min(dist[static_cast<size_t>(v)], dist[static_cast<size_t>(T)]);
    }
    // Bottleneck along the S -> T path.
    double bottleneck = remaining;
    for (int v = T; v != S; v = parent[static_cast<size_t>(v)]) {
      const int u = parent[static_cast<size_t>(v)];
      double cap = kInf;
      if (u == S) {
        cap = src.weights[static_cast<size_t>(v - 1)] -
              shipped[static_cast<size_t>(v - 1)];
      } else if (v == S) {
        cap = shipped[static_cast<size_t>(u - 1)];
      } else if (u >= 1 && u <= n && v >= n + 1 && v <= n + m) {
        cap = kInf;  // forward arc
      } else if (u >= n + 1 && u <= n + m && v >= 1 && v <= n) {
        cap = flow_at(v - 1, u - n - 1);
      } else if (v == T) {
        cap = dst.weights[static_cast<size_t>(u - n - 1)] -
              received[static_cast<size_t>(u - n - 1)];
      } else if (u == T) {
        cap = received[static_cast<size_t>(v - n - 1)];
      }
      bottleneck = std::min(bottleneck, cap);
    }
    if (bottleneck <= 1e-14) {
      // A numerically empty augmentation: the residual mass is round-off.
      break;
    }
    for (int v = T; v != S; v = parent[static_cast<size_t>(v)]) {
      const int u = parent[static_cast<size_t>(v)];
      if (u == S) {
        shipped[static_cast<size_t>(v - 1)] += bottleneck;
      } else if (v == S) {
        shipped[static_cast<size_t>(u - 1)] -= bottleneck;
      } else if (u >= 1 && u <= n && v >= n + 1 && v <= n + m) {
        flow[static_cast<std::int64_t>(u - 1) * m + (v - n - 1)] += bottleneck;
      } else if (u >= n + 1 && u <= n + m && v >= 1 && v <= n) {
        flow[static_cast<std::int64_t>(v - 1) * m + (u - n - 1)] -= bottleneck;
      } else if (v == T) {
        received[static_cast<size_t>(u - n - 1)] += bottleneck;
      } else if (u == T) {
        received[static_cast<size_t>(v - n - 1)] -= bottleneck;
      }
    }
    remaining -= bottleneck;
  }

  double total = 0.0;
  for (const auto& [key, f] : flow) {
    if (f > 0.0) total += f * cost[static_cast<size_t>(key)];
  }
  return total;
}

// Snap a large cloud onto the vertices of a coarse icosphere, summing the
// weights per cell.  Keeps exact transport affordable for density pairs at
// the price of one coarse-mesh quantization of the supports.
WeightedCloud snap_to_coarse(const WeightedCloud& in, int level) {
  const SphereMesh coarse = SphereMesh::build_icosphere(level);
  std::vector<double> mass(static_cast<size_t>(coarse.vertex_count()), 0.0);
  for (const auto& [pt, w] : in) {
    mass[static_cast<size_t>(coarse.nearest_vertex(pt))] += w;
  }
  WeightedCloud out;
  for (int i = 0; i < coarse.vertex_count(); ++i) {
    if (mass[static_cast<size_t>(i)] > 0.0) {
      out.emplace_back(coarse.vertex(i), mass[static_cast<size_t>(i)]);
    }
  }
  return out;
}

}  // namespace

double kr_distance(const WeightedCloud& a, const WeightedCloud& b) {
  return transport_cost(clean_cloud(a, "first argument"),
                        clean_cloud(b, "second argument"));
}

double kr_distance(const AtomicMeasure& a, const AtomicMeasure& b) {
  return kr_distance(a.cloud(), b.cloud());
}

double kr_distance(const Density& a, const AtomicMeasure& b) {
  return kr_distance(a.to_cloud(), b.cloud());
}

double kr_distance(const AtomicMeasure& a, const Density& b) {
  return kr_distance(b, a);
}

double kr_distance(const Density& a, const Density& b) {
  WeightedCloud ca = a.to_cloud();
  WeightedCloud cb = b.to_cloud();
  // Degrade gracefully for two wide supports: aggregate on a coarse
  // icosphere (error bounded by half its spacing per unit mass).
  for (int level = 4; level >= 2; --level) {
    if (static_cast<std::int64_t>(ca.size()) * static_cast<std::int64_t>(cb.size()) <=
        kTransportSizeCap) {
      break;
    }
    ca = snap_to_coarse(ca, level);
    cb = snap_to_coarse(cb, level);
  }
  return kr_distance(ca, cb);
}

// ---------------------------------------------------------------------------
// Configuration diagnostics
// ---------------------------------------------------------------------------

double d_of_nu(const AtomicMeasure& nu) {
  double best = kInf;
  const auto& atoms = nu.atoms();
  for (size_t i = 0; i < atoms.size(); ++i) {
    best = std::min(best, std::min(atoms[i].weight, 1.0 - atoms[i].weight));
    for (size_t j = i + 1; j < atoms.size(); ++j) {
      best = std::min(best, geodesic_distance(atoms[i].point, atoms[j].point));
    }
  }
  return best;
}

double distance_to_fewer_atoms(const AtomicMeasure& nu) {
  const AtomicMeasure canon = nu.canonical();
  const auto& atoms = canon.atoms();
  if (atoms.size() < 2) return kInf;
  double best = kInf;
  for (size_t i = 0; i < atoms.size(); ++i) {
    for (size_t j = i + 1; j < atoms.size(); ++j) {
      best = std::min(best, std::min(atoms[i].weight, atoms[j].weight) *
                                geodesic_distance(atoms[i].point, atoms[j].point));
    }
  }
  return best;
}

namespace {

double f0_profile(double t, const ConstantsConfig& c) {
  if (t <= c.delta1) return 1.0 / t;
  if (t >= 2.0 * c.delta1) return 0.5 / c.delta1;
  // Linear segment joining (delta1, 1/delta1) and (2 delta1, 1/(2 delta1)).
  const double a = 1.0 / c.delta1;
  const double b = 0.5 / c.delta1;
  return a + (b - a) * (t - c.delta1) / c.delta1;
}

}  // namespace

double f_functional(const AtomicMeasure& nu, const ConstantsConfig& config) {
  const auto& atoms = nu.atoms();
  double total = 0.0;
  for (size_t i = 0; i < atoms.size(); ++i) {
    const double w = atoms[i].weight;
    if (w <= 0.0 || w >= 1.0) return kInf;
    total += 1.0 / (w * (1.0 - w));
    for (size_t j = 0; j < atoms.size(); ++j) {
      if (i == j) continue;
      const double d = geodesic_distance(atoms[i].point, atoms[j].point);
      if (d <= kCoincidentTol) return kInf;
      total += f0_profile(d, config);
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Atom-removing flow
// ---------------------------------------------------------------------------

namespace {

AtomicMeasure merge_pair(const AtomicMeasure& nu, size_t i, size_t j) {
  const auto& atoms = nu.atoms();
  const Atom& a = atoms[i];
  const Atom& b = atoms[j];
  // Weighted average along the connecting geodesic.
  const double t = b.weight / (a.weight + b.weight);
  const SurfacePoint merged_pt = geodesic_point(a.point, b.point, t);
  std::vector<Atom> out;
  out.reserve(atoms.size() - 1);
  for (size_t idx = 0; idx < atoms.size(); ++idx) {
    if (idx == i) {
      out.push_back(Atom{merged_pt, a.weight + b.weight});
    } else if (idx != j) {
      out.push_back(atoms[idx]);
    }
  }
  return AtomicMeasure(std::move(out));
}

}  // namespace

AtomicMeasure h0_flow(const AtomicMeasure& nu, double t,
                      const ConstantsConfig& config) {
  if (!std::isfinite(t) || t < 0.0 || t > 1.0) {
    throw ConfigError("h0_flow: time parameter must lie in [0,1]");
  }
  if (t == 0.0) return nu;
  const AtomicMeasure canon = nu.canonical(kCoincidentTol);
  if (canon.size() < nu.size() || canon.size() <= 1) {
    // Already degenerate (duplicate atom or zero weight): a fixed point.
    return nu;
  }
  const double spacing = icosphere_spacing(config.mesh_level);
  // Sub-resolution pairs are treated as already merged: the repulsion is
  // effectively infinite there and the merge happens instantly at any t > 0.
  {
    const auto& atoms = canon.atoms();
    double best = kInf;
    size_t bi = 0, bj = 0;
    for (size_t i = 0; i < atoms.size(); ++i) {
      for (size_t j = i + 1; j < atoms.size(); ++j) {
        const double d = geodesic_distance(atoms[i].point, atoms[j].point);
        if (d < spacing && d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    if (std::isfinite(best)) return merge_pair(canon, bi, bj);
  }

  // Smooth phase.  All pairwise distances now exceed one mesh spacing,
  // which itself exceeds 2*delta1, so the pair repulsion is constant and
  // only the weight part of the functional drives the flow.  The weight
  // dynamics is the simplex-projected gradient of sum 1/(w(1-w)); the
  // smallest weight decays to zero in finite time.
  const int k = canon.size();
  std::vector<double> w(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) w[static_cast<size_t>(i)] = canon.atom(i).weight;

  std::vector<std::vector<double>> path;
  std::vector<double> cum;
  path.push_back(w);
  cum.push_back(0.0);

  const int kMaxSteps = 100000;
  int extinct = -1;
  for (int step = 0; step < kMaxSteps && extinct < 0; ++step) {
    std::vector<double> g(static_cast<size_t>(k));
    double mean = 0.0;
    for (int i = 0; i < k; ++i) {
      const double wi = w[static_cast<size_t>(i)];
      g[static_cast<size_t>(i)] = -(1.0 - 2.0 * wi) / sqr(wi * (1.0 - wi));
      mean += g[static_cast<size_t>(i)];
    }
    mean /= k;
    double gmax = 0.0;
    for (int i = 0; i < k; ++i) {
      g[static_cast<size_t>(i)] -= mean;
      gmax = std::max(gmax, std::abs(g[static_cast<size_t>(i)]));
    }
    if (gmax < 1e-12) {
      throw NumericError(
          "h0_flow: flow stalled at a balanced configuration before reaching "
          "a degeneration");
    }
    // Step keeping every weight within 10% of its distance to {0,1}.
    double dt = kInf;
    for (int i = 0; i < k; ++i) {
      const double gi = g[static_cast<size_t>(i)];
      const double wi = w[static_cast<size_t>(i)];
      if (gi < 0.0) dt = std::min(dt, 0.1 * wi / -gi);
      if (gi > 0.0) dt = std::min(dt, 0.1 * (1.0 - wi) / gi);
    }
    if (!std::isfinite(dt) || dt <= 0.0) {
      throw NumericError("h0_flow: degenerate step size");
    }
    std::vector<double> wn(static_cast<size_t>(k));
    double moved = 0.0;
    for (int i = 0; i < k; ++i) {
      wn[static_cast<size_t>(i)] =
          w[static_cast<size_t>(i)] + dt * g[static_cast<size_t>(i)];
      moved += std::abs(dt * g[static_cast<size_t>(i)]);
      if (wn[static_cast<size_t>(i)] < 1e-13) {
        wn[static_cast<size_t>(i)] = 0.0;
        extinct = i;
      }
    }
    w = wn;
    path.push_back(w);
    cum.push_back(cum.back() + moved);
  }
  if (extinct < 0) {
    throw NumericError("h0_flow: step budget exhausted before degeneration");
  }

  // Unit-time parametrization by cumulative weight movement.
  const double total = cum.back();
  const double target = t * total;
  size_t hi = 1;
  while (hi + 1 < cum.size() && cum[hi] < target) ++hi;
  const double lo_len = cum[hi - 1];
  const double hi_len = cum[hi];
  const double frac =
      hi_len > lo_len ? clamp01((target - lo_len) / (hi_len - lo_len)) : 1.0;

  std::vector<Atom> out;
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    const double wi = (1.0 - frac) * path[hi - 1][static_cast<size_t>(i)] +
                      frac * path[hi][static_cast<size_t>(i)];
    sum += wi;
  }
  for (int i = 0; i < k; ++i) {
    const double wi = ((1.0 - frac) * path[hi - 1][static_cast<size_t>(i)] +
                       frac * path[hi][static_cast<size_t>(i)]) /
                      sum;
    if (t >= 1.0 && wi <= 0.0) continue;  // drop the extinguished atom
    out.push_back(Atom{canon.atom(i).point, wi});
  }
  return AtomicMeasure(std::move(out));
}

// ---------------------------------------------------------------------------
// Marked-point retraction
// ---------------------------------------------------------------------------

namespace {

// Near/far cutoff around p: 0 inside B_{delta2}, 1 outside B_{2 delta2}.
double chi_d2(double t, const ConstantsConfig& c) {
  return ramp_up(t, c.delta2, 2.0 * c.delta2);
}

// Crossing activation profiles on the delta3 scale.  chi1 stays at 1 until
// 3/4 delta3 and vanishes at delta3; chi2 leaves 0 at delta3/2 and saturates
// at 5/4 delta3.  Their transitions overlap on (3/4 delta3, delta3), so at
// every argument at least one of (flow fully on, push at least 1/3 on)
// holds.
double chi1_d3(double t, const ConstantsConfig& c) {
  return ramp_down(t, 0.75 * c.delta3, c.delta3);
}
double chi2_d3(double t, const ConstantsConfig& c) {
  return ramp_up(t, 0.5 * c.delta3, 1.25 * c.delta3);
}

double mass_far_from(const AtomicMeasure& nu, const SurfacePoint& p,
                     const ConstantsConfig& c) {
  double m2 = 0.0;
  for (const Atom& a : nu.atoms()) {
    m2 += a.weight * chi_d2(geodesic_distance(a.point, p), c);
  }
  return m2;
}

// Transport distance from the far part of nu (weighted by chi_d2) to the
// configurations with ambient_k - 2 atoms: 0 when already that degenerate,
// the cheapest chain of greedy merges otherwise, infinite when no merge
// chain can reach the target (empty far part, or a single atom aiming at
// the empty configuration).
double far_part_degeneracy_gap(const AtomicMeasure& nu, const SurfacePoint& p,
                               int ambient_k, const ConstantsConfig& c) {
  std::vector<Atom> far;
  for (const Atom& a : nu.atoms()) {
    const double chi = chi_d2(geodesic_distance(a.point, p), c);
    if (a.weight * chi > 0.0) far.push_back(Atom{a.point, a.weight * chi});
  }
  const int target = ambient_k - 2;
  if (far.empty() || target < 0) return kInf;
  if (static_cast<int>(far.size()) <= target) return 0.0;
  double mass = 0.0;
  for (const Atom& a : far) mass += a.weight;
  for (Atom& a : far) a.weight /= mass;
  double cost = 0.0;
  while (static_cast<int>(far.size()) > target) {
    if (far.size() < 2) return kInf;
    size_t bi = 0, bj = 1;
    double best = kInf;
    for (size_t i = 0; i < far.size(); ++i) {
      for (size_t j = i + 1; j < far.size(); ++j) {
        const double cij = std::min(far[i].weight, far[j].weight) *
                           geodesic_distance(far[i].point, far[j].point);
        if (cij < best) {
          best = cij;
          bi = i;
          bj = j;
        }
      }
    }
    cost += best;
    // Lighter atom is absorbed at the heavier one's position.
    if (far[bi].weight < far[bj].weight) std::swap(bi, bj);
    far[bi].weight += far[bj].weight;
    far.erase(far.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  return cost;
}

// Moves atoms inside B_{2/tau_bar}(p) outward toward radius delta2 with
// strength s in [0,1]; atoms at or beyond 2/tau_bar (and p itself, whose
// outward ray is undefined) are left in place.  The strength tapers to zero
// across (1/tau_bar, 2/tau_bar) so the map is continuous in the atom
// positions.
AtomicMeasure radial_push(const AtomicMeasure& nu, const SurfacePoint& p,
                          double s, const ConstantsConfig& c) {
  if (s <= 0.0) return nu;
  std::vector<Atom> out;
  out.reserve(nu.atoms().size());
  const double zone_lo = 1.0 / c.tau_bar;
  const double zone_hi = 2.0 / c.tau_bar;
  for (const Atom& a : nu.atoms()) {
    const double d = geodesic_distance(a.point, p);
    if (d <= kTiny || d >= zone_hi) {
      out.push_back(a);
      continue;
    }
    const double s_eff = s * ramp_down(d, zone_lo, zone_hi);
    if (s_eff <= 0.0) {
      out.push_back(a);
      continue;
    }
    const double new_r = (1.0 - s_eff) * d + s_eff * c.delta2;
    const Vec3 dir = log_map(p, a.point) / d;
    out.push_back(Atom{exp_map(p, new_r * dir), a.weight});
  }
  return AtomicMeasure(std::move(out));
}

// Renormalization stage: when the far mass m2 drops below 2 delta2 the
// weights are rebalanced toward the near part (far atoms fade with
// chi_d2(m2)), keeping the map continuous across m2 = 2 delta2.
AtomicMeasure renormalize_stage(const AtomicMeasure& nu, const SurfacePoint& p,
                                const ConstantsConfig& c) {
  const double m2 = mass_far_from(nu, p, c);
  if (m2 >= 2.0 * c.delta2) return nu;
  const double cm = chi_d2(m2, c);
  std::vector<Atom> out;
  out.reserve(nu.atoms().size());
  double sum = 0.0;
  for (const Atom& a : nu.atoms()) {
    const double cd = chi_d2(geodesic_distance(a.point, p), c);
    const double w = a.weight * (cm + (1.0 - cd) * (1.0 - cm));
    out.push_back(Atom{a.point, w});
    sum += w;
  }
  if (sum <= kTiny) return nu;  // unreachable: m2 < 2 delta2 forces near mass
  for (Atom& a : out) a.weight /= sum;
  std::vector<Atom> kept;
  for (const Atom& a : out) {
    if (a.weight > 0.0) kept.push_back(a);
  }
  return AtomicMeasure(std::move(kept));
}

struct CollapsedAtom {
  SurfacePoint moved;
  double weight = 0.0;  // post-collapse weight
};

// Computes the near-point collapse atom by atom, preserving correspondence
// with the input.  Atoms exactly at p receive zero collapsed weight (their
// mass is redistributed by the normalization).
std::vector<CollapsedAtom> collapse_atoms(const AtomicMeasure& nu,
                                          const SurfacePoint& p,
                                          const ConstantsConfig& c) {
  const auto& atoms = nu.atoms();
  const double m2 = mass_far_from(nu, p, c);
  std::vector<double> dist(atoms.size());
  double near_mass = 0.0;
  double inv_tau_acc = 0.0;
  for (size_t i = 0; i < atoms.size(); ++i) {
    dist[i] = geodesic_distance(atoms[i].point, p);
    const double wnear = atoms[i].weight * (1.0 - chi_d2(dist[i], c));
    near_mass += wnear;
    inv_tau_acc += wnear * dist[i];
  }
  std::vector<CollapsedAtom> out(atoms.size());
  if (near_mass <= kTiny) {
    for (size_t i = 0; i < atoms.size(); ++i) {
      out[i] = CollapsedAtom{atoms[i].point, atoms[i].weight};
    }
    return out;
  }
  // Mean distance of the near part = its transport distance to the point
  // mass at p; this is the common landing radius of the deep atoms.
  const double inv_tau = inv_tau_acc / near_mass;
  const double zone_lo = 1.0 / c.tau_bar;
  const double zone_hi = 2.0 / c.tau_bar;
  double gee_total = 0.0;
  std::vector<double> gee(atoms.size(), 0.0);
  std::vector<double> rho(atoms.size(), 0.0);
  for (size_t i = 0; i < atoms.size(); ++i) {
    if (dist[i] <= kTiny) continue;  // atom at p: collapsed weight zero
    const double u = ramp_up(dist[i], zone_lo, zone_hi);
    gee[i] = (1.0 - u) * dist[i] + u;
    rho[i] = (1.0 - u) * inv_tau + u * dist[i];
    gee_total += atoms[i].weight * gee[i];
  }
  if (gee_total <= kTiny) {
    // All mass sits at p; the collapse degenerates to the point mass there.
    for (size_t i = 0; i < atoms.size(); ++i) {
      out[i] = CollapsedAtom{p, atoms[i].weight};
    }
    return out;
  }
  for (size_t i = 0; i < atoms.size(); ++i) {
    const double chi = chi_d2(dist[i], c);
    SurfacePoint moved = atoms[i].point;
    if (dist[i] > kTiny && std::abs(rho[i] - dist[i]) > 0.0) {
      const Vec3 dir = log_map(p, atoms[i].point) / dist[i];
      moved = exp_map(p, rho[i] * dir);
    }
    const double w = (1.0 - m2) * atoms[i].weight * gee[i] / gee_total +
                     atoms[i].weight * chi;
    out[i] = CollapsedAtom{moved, w};
  }
  return out;
}

AtomicMeasure rp_single_pass(const AtomicMeasure& nu, const SurfacePoint& p,
                             int ambient_k, const ConstantsConfig& c) {
  const double m2 = mass_far_from(nu, p, c);
  const double t_outer = chi_d2(m2, c);
  const double d1 = distance_to_fewer_atoms(nu);
  const double d2 = far_part_degeneracy_gap(nu, p, ambient_k, c);
  const double a_flow = chi1_d3(d1, c);
  const double a_h0 = a_flow * chi1_d3(d2, c);
  const double a_push_inner = a_flow * chi2_d3(d2, c);
  const double a_push_outer = t_outer * chi2_d3(d1, c);

  AtomicMeasure cur = nu;
  if (a_h0 > 0.0) cur = h0_flow(cur, a_h0, c);
  if (a_push_inner > 0.0) cur = radial_push(cur, p, a_push_inner, c);
  if (a_push_outer > 0.0) cur = radial_push(cur, p, a_push_outer, c);
  cur = renormalize_stage(cur, p, c);

  const std::vector<CollapsedAtom> collapsed = collapse_atoms(cur, p, c);
  std::vector<Atom> out;
  out.reserve(collapsed.size());
  double sum = 0.0;
  for (const CollapsedAtom& ca : collapsed) {
    if (ca.weight > 0.0) {
      out.push_back(Atom{ca.moved, ca.weight});
      sum += ca.weight;
    }
  }
  for (Atom& a : out) a.weight /= sum;
  return AtomicMeasure(std::move(out)).canonical(kCoincidentTol);
}

}  // namespace

bool sigma_kp_member(const AtomicMeasure& nu, const SurfacePoint& p,
                     int ambient_k, const ConstantsConfig& config) {
  const AtomicMeasure canon = nu.canonical(kCoincidentTol);
  std::vector<double> dist;
  dist.reserve(canon.atoms().size());
  double dmin = kInf;
  for (const Atom& a : canon.atoms()) {
    dist.push_back(geodesic_distance(a.point, p));
    dmin = std::min(dmin, dist.back());
  }
  const double floor_r = 1.0 / config.tau_bar;
  bool all_clear = true;
  for (double d : dist) {
    if (d < floor_r * (1.0 - 1e-12)) {
      all_clear = false;
      break;
    }
  }
  if (all_clear) return true;
  int farther = 0;
  const double tol = 1e-12 * std::max(1.0, dmin) + 1e-12 * dmin;
  for (double d : dist) {
    if (d > dmin + tol) ++farther;
  }
  return farther <= std::max(ambient_k - 2, 0);
}

AtomicMeasure r_p_retract(const AtomicMeasure& nu, const SurfacePoint& p,
                          const ConstantsConfig& config) {
  const int ambient_k = nu.size();
  const AtomicMeasure canon = nu.canonical(kCoincidentTol);
  const bool degenerate = canon.size() < ambient_k;
  if (canon.support_distance(p) <= kCoincidentTol && !degenerate) {
    throw DomainError(
        "r_p_retract: marked point lies on the support of a non-degenerate "
        "measure");
  }
  AtomicMeasure cur = canon;
  for (int pass = 0; pass < 3; ++pass) {
    cur = rp_single_pass(cur, p, ambient_k, config);
    if (sigma_kp_member(cur, p, ambient_k, config)) return cur;
  }
  throw NumericError(
      "r_p_retract: output failed the target-set membership after corrective "
      "passes");
}

AtomicMeasure r_p_collapse(const AtomicMeasure& nu, const SurfacePoint& p,
                           const ConstantsConfig& config, double unwind) {
  if (!std::isfinite(unwind) || unwind < 0.0 || unwind > 1.0) {
    throw ConfigError("r_p_collapse: unwind parameter must lie in [0,1]");
  }
  const std::vector<CollapsedAtom> collapsed = collapse_atoms(nu, p, config);
  std::vector<Atom> out;
  out.reserve(collapsed.size());
  double sum = 0.0;
  for (size_t i = 0; i < collapsed.size(); ++i) {
    const Atom& orig = nu.atoms()[i];
    const SurfacePoint pos =
        unwind <= 0.0 ? collapsed[i].moved
                      : (unwind >= 1.0
                             ? orig.point
                             : geodesic_point(collapsed[i].moved, orig.point,
                                              unwind));
    const double w =
        (1.0 - unwind) * collapsed[i].weight + unwind * orig.weight;
    out.push_back(Atom{pos, w});
    sum += w;
  }
  if (sum <= kTiny) {
    throw NumericError("r_p_collapse: collapsed measure carries no mass");
  }
  for (Atom& a : out) a.weight /= sum;
  // Atoms of zero weight are kept only while the homotopy needs the
  // correspondence; at the endpoints they are dropped.
  if (unwind <= 0.0 || unwind >= 1.0) {
    std::vector<Atom> kept;
    for (const Atom& a : out) {
      if (a.weight > 0.0) kept.push_back(a);
    }
    out = std::move(kept);
  }
  return AtomicMeasure(std::move(out));
}

// ---------------------------------------------------------------------------
// Join-element deformation
// ---------------------------------------------------------------------------

namespace {

// Radial projection in the (d, s) half-strip about the center (0, 1/2),
// pushing points out of the open rectangle (0, half_w) x (1/2 - half_h,
// 1/2 + half_h).  Returns the input unchanged outside the rectangle.
std::pair<double, double> theta_project(double d, double s, double half_w,
                                        double half_h) {
  if (half_w <= 0.0 || half_h <= 0.0) return {d, s};
  const double off = std::abs(s - 0.5);
  if (d >= half_w || off >= half_h) return {d, s};
  const double u1 = d > kTiny ? half_w / d : kInf;
  const double u2 = off > kTiny ? half_h / off : kInf;
  const double u = std::min(u1, u2);
  if (!std::isfinite(u)) {
    // Exactly at the excluded center: cannot happen for admissible inputs
    // (those are rejected as members of S before projecting).
    throw NumericError("join deformation: ray undefined at the excluded point");
  }
  return {u * d, 0.5 + u * (s - 0.5)};
}

// Rebuilds a join element with prescribed support distance, interpolation
// weight and configuration margin.  The point z moves along the ray leaving
// its nearest atom; the margin shrinks by scaling the weight of the atom
// farthest from z and redistributing the removed mass proportionally.
JoinElement rebuild_join(const JoinElement& el, double d_new, double s_new,
                         double dd_new) {
  const AtomicMeasure& nu = el.nu;
  SurfacePoint z = el.z;
  const auto& atoms = nu.atoms();

  size_t nearest = 0;
  double d_old = kInf;
  for (size_t i = 0; i < atoms.size(); ++i) {
    const double d = geodesic_distance(atoms[i].point, z);
    if (d < d_old) {
      d_old = d;
      nearest = i;
    }
  }
  if (d_old > kTiny && std::abs(d_new - d_old) > 0.0) {
    const Vec3 dir = log_map(atoms[nearest].point, z) / d_old;
    z = exp_map(atoms[nearest].point, d_new * dir);
  }

  const double dd_old = d_of_nu(nu);
  std::vector<Atom> out = atoms;
  if (dd_new < dd_old - kTiny && atoms.size() >= 2) {
    size_t far_idx = 0;
    double far_d = -1.0;
    for (size_t i = 0; i < atoms.size(); ++i) {
      const double d = geodesic_distance(atoms[i].point, z);
      if (d > far_d) {
        far_d = d;
        far_idx = i;
      }
    }
    const double w_star = atoms[far_idx].weight;
    const double removed = w_star - dd_new;
    const double rest = 1.0 - w_star;
    out[far_idx].weight = dd_new;
    for (size_t i = 0; i < atoms.size(); ++i) {
      if (i != far_idx) out[i].weight *= 1.0 + removed / rest;
    }
  }
  double sum = 0.0;
  for (const Atom& a : out) sum += a.weight;
  for (Atom& a : out) a.weight /= sum;
  return JoinElement(AtomicMeasure(std::move(out)), z, s_new);
}

}  // namespace

bool in_S(const JoinElement& el, const ConstantsConfig& config) {
  if (std::abs(el.s - 0.5) > 1e-12) return false;
  if (d_of_nu(el.nu) < config.delta - kTiny) return false;
  const double mesh_tol = icosphere_spacing(config.mesh_level);
  return el.nu.support_distance(el.z) <= mesh_tol;
}

bool in_Y_R(const JoinElement& el, const ConstantsConfig& config) {
  if (d_of_nu(el.nu) <= config.delta + kTiny) return true;
  if (el.nu.support_distance(el.z) >= config.delta2 - kTiny) return true;
  return el.s <= 1e-12 || el.s >= 1.0 - 1e-12;
}

JoinElement retract_to_YR(const JoinElement& el, const ConstantsConfig& config) {
  if (in_S(el, config)) {
    throw DomainError(
        "retract_to_YR: element lies on the excluded set (s = 1/2 with z on "
        "a well-separated support)");
  }
  const double dd = d_of_nu(el.nu);
  const double delta = config.delta;
  if (dd <= delta) return el;

  const double d = el.nu.support_distance(el.z);
  const double s = el.s;

  if (dd >= 2.0 * delta) {
    const auto [dp, sp] = theta_project(d, s, config.delta2, 0.5);
    if (dp == d && sp == s) return el;
    return rebuild_join(el, dp, sp, dd);
  }

  // Interpolation band: project out of the t-scaled rectangle, then project
  // radially about (margin, distance, weight) = (2 delta, 0, 1/2) in the
  // three-dimensional slab.
  const double t = (dd - delta) / delta;
  const auto [d1, s1] = theta_project(d, s, t * config.delta2, 0.5 * t);
  const bool in_target =
      d1 >= config.delta2 || s1 <= 1e-15 || s1 >= 1.0 - 1e-15;
  if (in_target) {
    if (d1 == d && s1 == s) return el;
    return rebuild_join(el, d1, s1, dd);
  }
  const double u_dd = delta / (2.0 * delta - dd);
  const double u_d = d1 > kTiny ? config.delta2 / d1 : kInf;
  const double off = std::abs(s1 - 0.5);
  const double u_s = off > kTiny ? 0.5 / off : kInf;
  const double u = std::max(1.0, std::min({u_dd, u_d, u_s}));
  const double dd2 = 2.0 * delta + u * (dd - 2.0 * delta);
  const double d2 = u * d1;
  const double s2 = 0.5 + u * (s1 - 0.5);
  if (dd2 == dd && d2 == d && s2 == s) return el;
  return rebuild_join(el, d2, s2, dd2);
}

// ---------------------------------------------------------------------------
// k-atom projection
// ---------------------------------------------------------------------------

namespace {

// Weighted geodesic median of a localized cluster via tangent-space
// fixed-point iterations (the W1-optimal center for transport to a single
// atom).
SurfacePoint geodesic_median(const std::vector<SurfacePoint>& pts,
                             const std::vector<double>& w,
                             const SurfacePoint& seed) {
  SurfacePoint x = seed;
  for (int iter = 0; iter < 60; ++iter) {
    Vec3 pull = Vec3::Zero();
    double inv_sum = 0.0;
    double anchored = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
      const double d = geodesic_distance(x, pts[i]);
      if (d <= 1e-14) {
        anchored += w[i];
        continue;
      }
      pull += w[i] / d * log_map(x, pts[i]);
      inv_sum += w[i] / d;
    }
    if (pull.norm() <= anchored + 1e-18 || inv_sum <= 0.0) break;
    // Near a fixed point the pull terms cancel and round-off leaves a
    // spurious radial component; remove it before stepping.
    Vec3 step = pull / inv_sum;
    step -= step.dot(x.v) / sqr(kSphereRadius) * x.v;
    if (step.norm() < 1e-13) break;
    const SurfacePoint next = exp_map(x, step);
    const double moved = geodesic_distance(x, next);
    x = next;
    if (moved < 1e-13) break;
  }
  return x;
}

std::pair<AtomicMeasure, double> project_cloud_best(
    const WeightedCloud& cloud_in, int k, const ConstantsConfig& /*config*/) {
  if (k < 1) throw ConfigError("project_psi_k: k must be at least 1");
  CleanCloud cloud;
  {
    double sum = 0.0;
    for (const auto& [pt, w] : cloud_in) {
      if (!std::isfinite(w) || w < -kCloudSumTol) {
        throw ConfigError("project_psi_k: negative weight in the input cloud");
      }
      if (w > 0.0) {
        cloud.points.push_back(pt);
        cloud.weights.push_back(w);
      }
      sum += w;
    }
    if (cloud.points.empty()) {
      throw ConfigError("project_psi_k: input carries no positive mass");
    }
    if (std::abs(sum - 1.0) > kCloudSumTol) {
      throw ConfigError("project_psi_k: input is not a probability measure");
    }
    for (double& w : cloud.weights) w /= sum;
  }
  const size_t n = cloud.points.size();

  // Merge exactly coincident support points so that atomic inputs project
  // to themselves.
  {
    std::vector<SurfacePoint> pts;
    std::vector<double> ws;
    for (size_t i = 0; i < n; ++i) {
      bool absorbed = false;
      for (size_t j = 0; j < pts.size(); ++j) {
        if (geodesic_distance(cloud.points[i], pts[j]) <= kCoincidentTol) {
          ws[j] += cloud.weights[i];
          absorbed = true;
          break;
        }
      }
      if (!absorbed) {
        pts.push_back(cloud.points[i]);
        ws.push_back(cloud.weights[i]);
      }
    }
    cloud.points = std::move(pts);
    cloud.weights = std::move(ws);
  }
  const size_t nn = cloud.points.size();
  if (static_cast<int>(nn) <= k) {
    std::vector<Atom> atoms;
    for (size_t i = 0; i < nn; ++i) {
      atoms.push_back(Atom{cloud.points[i], cloud.weights[i]});
    }
    AtomicMeasure exact(std::move(atoms));
    const double achieved = kr_distance(cloud_in, exact.cloud());
    return {std::move(exact), achieved};
  }

  // Farthest-point seeding restricted to the heavy part of the cloud.
  double wmax = 0.0;
  for (double w : cloud.weights) wmax = std::max(wmax, w);
  std::vector<size_t> candidates;
  for (size_t i = 0; i < nn; ++i) {
    if (cloud.weights[i] >= 0.01 * wmax) candidates.push_back(i);
  }
  if (static_cast<int>(candidates.size()) < k) {
    candidates.resize(nn);
    std::iota(candidates.begin(), candidates.end(), 0);
  }
  std::vector<SurfacePoint> centers;
  {
    size_t first = candidates[0];
    for (size_t i : candidates) {
      if (cloud.weights[i] > cloud.weights[first]) first = i;
    }
    centers.push_back(cloud.points[first]);
    while (static_cast<int>(centers.size()) < k) {
      size_t best = candidates[0];
      double best_d = -1.0;
      for (size_t i : candidates) {
        double dmin = kInf;
        for (const SurfacePoint& cpt : centers) {
          dmin = std::min(dmin, geodesic_distance(cloud.points[i], cpt));
        }
        if (dmin > best_d) {
          best_d = dmin;
          best = i;
        }
      }
      if (best_d <= kCoincidentTol) break;  // no more distinct sites
      centers.push_back(cloud.points[best]);
    }
  }

  // Lloyd refinement with geodesic-median center updates.
  std::vector<int> assign(nn, -1);
  for (int iter = 0; iter < 40; ++iter) {
    bool changed = false;
    for (size_t i = 0; i < nn; ++i) {
      int best = 0;
      double best_d = kInf;
      for (size_t cidx = 0; cidx < centers.size(); ++cidx) {
        const double d = geodesic_distance(cloud.points[i], centers[cidx]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(cidx);
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    double moved = 0.0;
    for (size_t cidx = 0; cidx < centers.size(); ++cidx) {
      std::vector<SurfacePoint> pts;
      std::vector<double> ws;
      Vec3 mean = Vec3::Zero();
      for (size_t i = 0; i < nn; ++i) {
        if (assign[i] == static_cast<int>(cidx)) {
          pts.push_back(cloud.points[i]);
          ws.push_back(cloud.weights[i]);
          mean += cloud.weights[i] * cloud.points[i].v;
        }
      }
      if (pts.empty()) continue;
      const SurfacePoint seed =
          mean.norm() > 1e-12 ? SurfacePoint::on_sphere(mean) : pts.front();
      const SurfacePoint next = geodesic_median(pts, ws, seed);
      moved = std::max(moved, geodesic_distance(centers[cidx], next));
      centers[cidx] = next;
    }
    if (!changed && moved < 1e-12) break;
  }

  std::vector<double> cluster_mass(centers.size(), 0.0);
  for (size_t i = 0; i < nn; ++i) {
    int best = 0;
    double best_d = kInf;
    for (size_t cidx = 0; cidx < centers.size(); ++cidx) {
      const double d = geodesic_distance(cloud.points[i], centers[cidx]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(cidx);
      }
    }
    cluster_mass[static_cast<size_t>(best)] += cloud.weights[i];
  }
  std::vector<Atom> atoms;
  double sum = 0.0;
  for (size_t cidx = 0; cidx < centers.size(); ++cidx) {
    if (cluster_mass[cidx] > 0.0) {
      atoms.push_back(Atom{centers[cidx], cluster_mass[cidx]});
      sum += cluster_mass[cidx];
    }
  }
  for (Atom& a : atoms) a.weight /= sum;
  AtomicMeasure result(std::move(atoms));

  const double achieved = kr_distance(cloud_in, result.cloud());
  return {std::move(result), achieved};
}

AtomicMeasure project_cloud(const WeightedCloud& cloud_in, int k,
                            const ConstantsConfig& config) {
  auto [result, achieved] = project_cloud_best(cloud_in, k, config);
  if (achieved > 2.0 * config.eps(k)) {
    throw DomainError("project_psi_k: density too far from the " +
                      fmt(static_cast<double>(k)) +
                      "-atom configurations (distance " + fmt(achieved) + ")");
  }
  return result;
}

}  // namespace

AtomicMeasure project_psi_k(const WeightedCloud& cloud, int k,
                            const ConstantsConfig& config) {
  return project_cloud(cloud, k, config);
}

double distance_to_atomic(const WeightedCloud& cloud, int k,
                          const ConstantsConfig& config) {
  return project_cloud_best(cloud, k, config).second;
}

double distance_to_atomic(const SphereMesh& mesh, const Eigen::VectorXd& density,
                          int k, const ConstantsConfig& config) {
  if (density.size() != mesh.vertex_count()) {
    throw ConfigError(
        "distance_to_atomic: density length does not match the mesh");
  }
  WeightedCloud cloud;
  cloud.reserve(static_cast<size_t>(mesh.vertex_count()));
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const double w = mesh.quad_weights()[i] * density[i];
    if (w > 0.0) cloud.emplace_back(mesh.vertex(i), w);
  }
  return project_cloud_best(cloud, k, config).second;
}

double distance_to_atomic(const Density& density, int k,
                          const ConstantsConfig& config) {
  return project_cloud_best(density.to_cloud(), k, config).second;
}

AtomicMeasure project_psi_k(const SphereMesh& mesh,
                            const Eigen::VectorXd& density, int k,
                            const ConstantsConfig& config) {
  if (density.size() != mesh.vertex_count()) {
    throw ConfigError("project_psi_k: density length does not match the mesh");
  }
  WeightedCloud cloud;
  cloud.reserve(static_cast<size_t>(mesh.vertex_count()));
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const double w = mesh.quad_weights()[i] * density[i];
    if (w < -1e-9) {
      throw ConfigError("project_psi_k: density must be nonnegative");
    }
    if (w > 0.0) cloud.emplace_back(mesh.vertex(i), w);
  }
  return project_cloud(cloud, k, config);
}

AtomicMeasure project_psi_k(const Density& density, int k,
                            const ConstantsConfig& config) {
  return project_cloud(density.to_cloud(), k, config);
}

// ---------------------------------------------------------------------------
// Mass-separation witnesses
// ---------------------------------------------------------------------------

namespace {

std::optional<SeparatedPoints> separated_search(
    const std::vector<SurfacePoint>& candidates,
    const std::vector<double>& rungs, int l,
    const std::function<double(const SurfacePoint&, double)>& ball_mass) {
  for (double eps_prime : rungs) {
    std::vector<double> mass(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i) {
      mass[i] = ball_mass(candidates[i], eps_prime);
    }
    std::vector<SurfacePoint> chosen;
    while (static_cast<int>(chosen.size()) < l) {
      int best = -1;
      for (size_t i = 0; i < candidates.size(); ++i) {
        if (mass[i] <= eps_prime) continue;
        bool far_enough = true;
        for (const SurfacePoint& c : chosen) {
          if (geodesic_distance(candidates[i], c) <= 2.0 * eps_prime) {
            far_enough = false;
            break;
          }
        }
        if (!far_enough) continue;
        if (best < 0 || mass[i] > mass[static_cast<size_t>(best)]) {
          best = static_cast<int>(i);
        }
      }
      if (best < 0) break;
      chosen.push_back(candidates[static_cast<size_t>(best)]);
    }
    if (static_cast<int>(chosen.size()) == l) {
      return SeparatedPoints{std::move(chosen), eps_prime};
    }
  }
  return std::nullopt;
}

std::vector<double> separation_rungs(double eps, double floor_radius,
                                     const ConstantsConfig& config) {
  std::vector<double> rungs;
  const double configured = config.eps_prime_factor * eps;
  if (configured > floor_radius) rungs.push_back(configured);
  for (double r = 0.44; r > floor_radius; r *= 0.8) {
    if (std::abs(r - configured) > 1e-15) rungs.push_back(r);
  }
  return rungs;
}

}  // namespace

std::optional<SeparatedPoints> separated_points(const SphereMesh& mesh,
                                                const Eigen::VectorXd& density,
                                                int l, double eps,
                                                const ConstantsConfig& config) {
  if (l < 1) throw ConfigError("separated_points: l must be at least 1");
  if (!(eps > 0.0)) throw ConfigError("separated_points: eps must be positive");
  if (density.size() != mesh.vertex_count()) {
    throw ConfigError("separated_points: density length does not match mesh");
  }
  std::vector<double> vmass(static_cast<size_t>(mesh.vertex_count()));
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    vmass[static_cast<size_t>(i)] =
        std::max(0.0, mesh.quad_weights()[i] * density[i]);
  }
  // Candidate centers: a coarse sub-grid plus the highest-density vertices.
  std::vector<SurfacePoint> candidates;
  {
    std::vector<char> taken(static_cast<size_t>(mesh.vertex_count()), 0);
    const SphereMesh coarse =
        SphereMesh::build_icosphere(std::min(3, mesh.level()));
    for (int i = 0; i < coarse.vertex_count(); ++i) {
      const int idx = mesh.nearest_vertex(coarse.vertex(i));
      if (!taken[static_cast<size_t>(idx)]) {
        taken[static_cast<size_t>(idx)] = 1;
        candidates.push_back(mesh.vertex(idx));
      }
    }
    std::vector<int> order(static_cast<size_t>(mesh.vertex_count()));
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(),
                      order.begin() + std::min<size_t>(64, order.size()),
                      order.end(), [&](int a, int b) {
                        return density[a] > density[b];
                      });
    for (size_t r = 0; r < std::min<size_t>(64, order.size()); ++r) {
      const int idx = order[r];
      if (!taken[static_cast<size_t>(idx)]) {
        taken[static_cast<size_t>(idx)] = 1;
        candidates.push_back(mesh.vertex(idx));
      }
    }
  }
  const auto ball_mass = [&](const SurfacePoint& c, double r) {
    double total = 0.0;
    for (int idx : mesh.vertices_in_ball(c, r)) {
      total += vmass[static_cast<size_t>(idx)];
    }
    return total;
  };
  return separated_search(candidates,
                          separation_rungs(eps, 0.5 * mesh.spacing(), config),
                          l, ball_mass);
}

std::optional<SeparatedPoints> separated_points(const Density& density, int l,
                                                double eps,
                                                const ConstantsConfig& config) {
  if (l < 1) throw ConfigError("separated_points: l must be at least 1");
  if (!(eps > 0.0)) throw ConfigError("separated_points: eps must be positive");
  std::vector<SurfacePoint> candidates;
  for (const auto& core : density.cores()) candidates.push_back(core.center);
  {
    const SphereMesh coarse = SphereMesh::build_icosphere(3);
    for (int i = 0; i < coarse.vertex_count(); ++i) {
      candidates.push_back(coarse.vertex(i));
    }
  }
  // Core cdfs resolve arbitrarily fine scales, so the ladder floor is a
  // fixed tiny radius rather than a mesh quantity.
  const double floor_radius = 1e-6;
  const auto ball_mass = [&](const SurfacePoint& c, double r) {
    return density.mass_in_ball(c, r);
  };
  return separated_search(candidates, separation_rungs(eps, floor_radius, config),
                          l, ball_mass);
}

}  // namespace toda
