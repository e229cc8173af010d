// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0

#include "todasphere/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <utility>

namespace toda {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const SphereMesh& grid_mesh(int level) {
  static std::mutex mu;
  static std::map<int, SphereMesh> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(level);
  if (it == cache.end()) {
    it = cache.emplace(level, SphereMesh::build_icosphere(level)).first;
  }
  return it->second;
}

SurfacePoint antipode(const SurfacePoint& p) {
  return SurfacePoint::on_sphere(-p.v);
}

// Smallest radius where the mass inside B_s(x) reaches the mass outside
// B_{R0 s}(x); the difference is monotone in s.
double balance_radius(const std::function<double(double)>& mass,
                      double domain_radius, double R0) {
  const auto diff = [&](double s) {
    return mass(s) - (1.0 - mass(R0 * s));
  };
  double lo = 0.0;
  double hi = 2.0 * domain_radius;
  for (int iter = 0; iter < 200 && (hi - lo) > 1e-10 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (diff(mid) >= 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Ball-mass oracle for one localized density: the analytic components are
// queried through the density itself; the background rows are reduced, per
// query point, to a sorted radial prefix table.
class BallMassOracle {
 public:
  explicit BallMassOracle(const LocalizedDensity& f) : f_(&f) {
    for (const auto& core : f.f.cores()) analytic_.add_core(core);
    for (const auto& patch : f.f.patches()) analytic_.add_uniform(patch);
    const SphereMesh* mesh = f.f.background_mesh();
    if (mesh != nullptr) {
      const Eigen::VectorXd& masses = f.f.background_masses();
      for (int i = 0; i < mesh->vertex_count(); ++i) {
        if (masses[i] > 0.0) {
          bg_points_.push_back(mesh->vertex(i));
          bg_masses_.push_back(masses[i]);
        }
      }
    }
  }

  // Mass function r -> mass(B_r(x)); the returned callable borrows *this.
  std::function<double(double)> at(const SurfacePoint& x) {
    std::vector<std::pair<double, double>> radial;
    radial.reserve(bg_points_.size());
    for (size_t i = 0; i < bg_points_.size(); ++i) {
      radial.emplace_back(geodesic_distance(x, bg_points_[i]), bg_masses_[i]);
    }
    std::sort(radial.begin(), radial.end());
    dist_.clear();
    cum_.clear();
    double acc = 0.0;
    for (const auto& [d, m] : radial) {
      acc += m;
      dist_.push_back(d);
      cum_.push_back(acc);
    }
    const SurfacePoint xx = x;
    return [this, xx](double r) {
      double m = analytic_.mass_in_ball(xx, r);
      if (!dist_.empty()) {
        const auto it = std::upper_bound(dist_.begin(), dist_.end(), r);
        if (it != dist_.begin()) m += cum_[(it - dist_.begin()) - 1];
      }
      return m;
    };
  }

 private:
  const LocalizedDensity* f_;
  Density analytic_;
  std::vector<SurfacePoint> bg_points_;
  std::vector<double> bg_masses_;
  std::vector<double> dist_;
  std::vector<double> cum_;
};

}  // namespace

LocalizedDensity::LocalizedDensity(Density f_in, const SurfacePoint& center_in,
                                   double radius_in)
    : f(std::move(f_in)), center(center_in), radius(radius_in) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw ConfigError("localized density: radius must be positive");
  }
  const double total = f.total_mass();
  if (std::abs(total - 1.0) > 1e-8) {
    throw ConfigError("localized density: total mass must be 1");
  }
  const double inside = f.mass_in_ball(center, radius * (1.0 + 1e-6) + 1e-12);
  if (inside < 1.0 - 1e-6) {
    throw ConfigError(
        "localized density: mass is not supported in the stated ball");
  }
}

bool LocalizedDensity::concentrated(double eps) const {
  return f.mass_in_ball(center, eps) > 1.0 - eps;
}

LocalizedDensity localize(const Density& f, const SurfacePoint& x0, double r) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw ConfigError("localize: radius must be positive");
  }
  // Restriction keeps only components centered inside the ball (plus
  // background rows there); make sure something survives before clipping.
  bool survivor = false;
  for (const auto& core : f.cores()) {
    const double d0 = geodesic_distance(core.center, x0);
    if (d0 < r && core.mass > 0.0 && core.cdf.value(r - d0) > 0.0) {
      survivor = true;
      break;
    }
  }
  if (!survivor) {
    for (const auto& patch : f.patches()) {
      if (patch.mass <= 0.0) continue;
      // A partially overlapping patch also counts: the clipping step
      // below rejects it with its own (more specific) error.
      if (patch.radius >= kHalfCircumference ||
          geodesic_distance(patch.center, x0) < r + patch.radius) {
        survivor = true;
        break;
      }
    }
  }
  if (!survivor && f.background_mesh() != nullptr) {
    for (int i : f.background_mesh()->vertices_in_ball(x0, r)) {
      if (f.background_masses()[i] > 0.0) {
        survivor = true;
        break;
      }
    }
  }
  if (!survivor) {
    throw DomainError("localize: no component is centered inside the ball");
  }
  const Density clipped = f.restricted(x0, r);
  // Cores kept by the restriction may still have radial tails leaking out
  // of the ball; cut each tail at the largest centered radius certain to
  // stay inside (conservative for off-center cores).
  Density rebuilt;
  for (const auto& core : clipped.cores()) {
    const double d0 = geodesic_distance(core.center, x0);
    const double max_inside = r - d0;
    if (max_inside <= 0.0) continue;
    if (core.cdf.support_radius() <= max_inside * (1.0 + 1e-12)) {
      rebuilt.add_core(core);
      continue;
    }
    Density::Core cut = core;
    const double keep = core.cdf.value(max_inside);
    if (keep <= 0.0) continue;
    cut.cdf = core.cdf.truncated(max_inside);
    cut.mass = core.mass * keep;
    rebuilt.add_core(cut);
  }
  for (const auto& patch : clipped.patches()) rebuilt.add_uniform(patch);
  if (clipped.background_mesh() != nullptr) {
    rebuilt.set_background(clipped.background_mesh(),
                           clipped.background_masses());
  }
  if (rebuilt.total_mass() <= 0.0) {
    throw DomainError("localize: no mass remains after truncation");
  }
  return LocalizedDensity(rebuilt.normalized(), x0, r);
}

double sigma_x(const LocalizedDensity& f, const SurfacePoint& x,
               const ConstantsConfig& config) {
  if (geodesic_distance(x, f.center) > f.radius * (1.0 + 1e-9) + 1e-12) {
    throw ConfigError("sigma_x: the point lies outside the domain ball");
  }
  BallMassOracle oracle(f);
  return balance_radius(oracle.at(x), f.radius, config.R0);
}

ScaleField t_and_s(const LocalizedDensity& f, const ConstantsConfig& config) {
  config.validate();
  ScaleField out;
  const SphereMesh& mesh = f.f.background_mesh() != nullptr
                               ? *f.f.background_mesh()
                               : grid_mesh(config.mesh_level);
  out.points.push_back(f.center);
  out.quad.push_back(1.0 / mesh.vertex_count());
  // Structural candidates: grid vertices alone can miss a component far
  // sharper than the mesh spacing, so component centers always compete.
  for (const auto& core : f.f.cores()) {
    if (geodesic_distance(core.center, f.center) <= f.radius) {
      out.points.push_back(core.center);
      out.quad.push_back(1.0 / mesh.vertex_count());
    }
  }
  for (const auto& patch : f.f.patches()) {
    if (geodesic_distance(patch.center, f.center) <= f.radius) {
      out.points.push_back(patch.center);
      out.quad.push_back(1.0 / mesh.vertex_count());
    }
  }
  for (int i : mesh.vertices_in_ball(f.center, f.radius)) {
    out.points.push_back(mesh.vertex(i));
    out.quad.push_back(mesh.quad_weights()[i]);
  }
  BallMassOracle oracle(f);
  out.sigma.resize(out.points.size());
  out.t_stat.resize(out.points.size());
  double min_sigma = kInf;
  for (size_t i = 0; i < out.points.size(); ++i) {
    const auto mass = oracle.at(out.points[i]);
    out.sigma[i] = balance_radius(mass, f.radius, config.R0);
    out.t_stat[i] = mass(out.sigma[i]);
    min_sigma = std::min(min_sigma, out.sigma[i]);
    if (out.argmax < 0 || out.t_stat[i] > out.max_t) {
      out.max_t = out.t_stat[i];
      out.argmax = static_cast<int>(i);
    }
  }
  out.sigma_f = 3.0 * min_sigma;
  for (size_t i = 0; i < out.points.size(); ++i) {
    if (out.t_stat[i] > config.tau_universal && out.sigma[i] < out.sigma_f) {
      out.s_set.push_back(static_cast<int>(i));
    }
  }
  if (out.s_set.empty()) {
    throw NumericError(
        "t_and_s: no candidate exceeds the concentration threshold; the "
        "grid is too coarse for this density");
  }
  return out;
}

ConcentrationDescriptor psi_map(const LocalizedDensity& f,
                                const ConstantsConfig& config) {
  const ScaleField sf = t_and_s(f, config);
  if (sf.sigma_f > config.delta_co) {
    throw DomainError(
        "psi_map: concentration scale exceeds the projection threshold");
  }
  Vec3 num = Vec3::Zero();
  double den = 0.0;
  for (size_t i = 0; i < sf.points.size(); ++i) {
    const double w = std::max(sf.t_stat[i] - config.tau_universal, 0.0) *
                     std::max(sf.sigma_f - sf.sigma[i], 0.0) * sf.quad[i];
    num += w * sf.points[i].v;
    den += w;
  }
  if (den <= 0.0) {
    throw DomainError("psi_map: the concentration weight vanishes");
  }
  const Vec3 eta = num / den;
  if (eta.norm() < 0.1 * kSphereRadius) {
    throw DomainError("psi_map: center of mass is not radially projectable");
  }
  return ConcentrationDescriptor{SurfacePoint::on_sphere(eta), sf.sigma_f};
}

std::optional<std::vector<LocalScale>> local_scales(
    const Density& f, int l, const ConstantsConfig& config) {
  if (l < 1) throw ConfigError("local_scales: l must be at least 1");
  const double dl = distance_to_atomic(f, l, config);
  if (!(dl < 2.0 * config.eps(l))) return std::nullopt;
  if (l >= 2) {
    const double dprev = distance_to_atomic(f, l - 1, config);
    if (!(dprev > config.eps(l - 1))) return std::nullopt;
  }
  const double eps_sep = (l >= 2) ? config.eps(l - 1) : config.eps(1);
  const auto sep = separated_points(f, l, eps_sep, config);
  if (!sep.has_value()) return std::nullopt;
  std::vector<LocalScale> out;
  try {
    for (const SurfacePoint& site : sep->points) {
      const LocalizedDensity loc = localize(f, site, sep->eps_prime);
      out.push_back(LocalScale{site, sep->eps_prime, psi_map(loc, config)});
    }
  } catch (const DomainError&) {
    // A site's localized mass is too spread for the descriptor; the
    // per-site scales are then unavailable as a whole.
    return std::nullopt;
  }
  return out;
}

std::optional<std::vector<LocalScale>> local_scales(
    const SphereMesh& mesh, const Eigen::VectorXd& u, int l,
    const ConstantsConfig& config) {
  return local_scales(Density::from_log_field(mesh, u), l, config);
}

double join_ramp(double t, double M) {
  if (!(M > 2.0)) throw ConfigError("join_ramp: M must exceed 2");
  if (!(t >= 0.0)) throw ConfigError("join_ramp: ratio must be nonnegative");
  if (t <= 1.0 / M) return 0.0;
  const double f_low = (2.0 / M) / (1.0 + 2.0 / M);
  if (t < 2.0 / M) return f_low * (t - 1.0 / M) * M;
  if (t <= M) return t / (1.0 + t);
  const double f_high = M / (1.0 + M);
  if (t < 2.0 * M) return f_high + (1.0 - f_high) * (t - M) / M;
  return 1.0;
}

namespace {

// Distances of the pair to the atomic strata plus whatever per-site scale
// data the cutoffs can reach.  raw[l] is the distance achieved by the
// l-site search itself (the projection gate uses it); mono[l] additionally
// enforces monotonicity in l, since the strata are nested.
struct ScaleContext {
  int k = 1;
  std::vector<double> raw1;  // index l = 1..k
  std::vector<double> mono1;
  double d21 = kInf;
  std::vector<std::optional<std::vector<LocalScale>>> locs1;
  std::optional<std::vector<LocalScale>> locs2;
};

ScaleContext build_context(const Density& f1, const Density& f2, int k,
                           const ConstantsConfig& config) {
  if (k < 1) throw ConfigError("global_scales: k must be at least 1");
  config.validate();
  ScaleContext ctx;
  ctx.k = k;
  ctx.raw1.assign(static_cast<size_t>(k) + 1, kInf);
  ctx.mono1.assign(static_cast<size_t>(k) + 1, kInf);
  double running = kInf;
  for (int l = 1; l <= k; ++l) {
    ctx.raw1[static_cast<size_t>(l)] = distance_to_atomic(f1, l, config);
    running = std::min(running, ctx.raw1[static_cast<size_t>(l)]);
    ctx.mono1[static_cast<size_t>(l)] = running;
  }
  ctx.d21 = distance_to_atomic(f2, 1, config);
  ctx.locs1.resize(static_cast<size_t>(k) + 1);
  for (int l = 1; l <= k; ++l) {
    if (ctx.raw1[static_cast<size_t>(l)] < 2.0 * config.eps(l)) {
      ctx.locs1[static_cast<size_t>(l)] = local_scales(f1, l, config);
    }
  }
  if (ctx.d21 < 2.0 * config.eps(1)) {
    ctx.locs2 = local_scales(f2, 1, config);
  }
  return ctx;
}

double mean_sigma(const std::vector<LocalScale>& locs) {
  double acc = 0.0;
  for (const LocalScale& ls : locs) acc += ls.desc.sigma;
  return acc / static_cast<double>(locs.size());
}

// The averaged-scale recursion: each level blends the previous level's
// value with the mean per-site scale, weighted by closeness to the
// previous stratum.  Unavailable pieces fall back to the diffuse value 1,
// which only happens where their blend weight vanishes.
double averaged_scale(const ScaleContext& ctx, int l,
                      const ConstantsConfig& config) {
  if (l <= 1) {
    const auto& loc = ctx.locs1[1];
    return loc.has_value() ? (*loc)[0].desc.sigma : 1.0;
  }
  const double g = ramp_down(ctx.mono1[static_cast<size_t>(l - 1)],
                             config.eps(l - 1), 2.0 * config.eps(l - 1));
  double deeper = 1.0;
  double level_mean = 1.0;
  if (g > 0.0) deeper = averaged_scale(ctx, l - 1, config);
  if (g < 1.0) {
    const auto& loc = ctx.locs1[static_cast<size_t>(l)];
    if (loc.has_value()) level_mean = mean_sigma(*loc);
  }
  return g * deeper + (1.0 - g) * level_mean;
}

GlobalScales scales_from_context(const ScaleContext& ctx,
                                 const ConstantsConfig& config) {
  GlobalScales out;
  const int k = ctx.k;

  const double g1 = ramp_down(ctx.d21, config.eps(1), 2.0 * config.eps(1));
  const double sigma_z =
      ctx.locs2.has_value() ? (*ctx.locs2)[0].desc.sigma : 1.0;
  out.sigma2 = g1 * sigma_z + (1.0 - g1);

  const double fk = ramp_down(ctx.mono1[static_cast<size_t>(k)],
                              config.eps(k), 2.0 * config.eps(k));
  double blend_a = 1.0;
  if (fk > 0.0) {
    if (k == 1) {
      blend_a = averaged_scale(ctx, 1, config);
    } else {
      const double g_prev =
          ramp_down(ctx.mono1[static_cast<size_t>(k - 1)], config.eps(k - 1),
                    2.0 * config.eps(k - 1));
      double deeper = 1.0;
      if (g_prev > 0.0) deeper = averaged_scale(ctx, k - 1, config);
      double blend_b = 1.0;
      if (g_prev < 1.0) {
        const auto& loc = ctx.locs1[static_cast<size_t>(k)];
        if (loc.has_value()) {
          const double level_mean = mean_sigma(*loc);
          double near_dist = kInf;
          int nearest = -1;
          if (ctx.locs2.has_value()) {
            const SurfacePoint& beta_z = (*ctx.locs2)[0].desc.beta;
            for (size_t i = 0; i < loc->size(); ++i) {
              const double d = geodesic_distance(beta_z, (*loc)[i].desc.beta);
              if (d < near_dist) {
                near_dist = d;
                nearest = static_cast<int>(i);
              }
            }
          }
          const double eps_p = config.eps_prime(k - 1);
          const double h = std::isfinite(near_dist)
                               ? ramp_down(near_dist, eps_p / 16.0, eps_p / 8.0)
                               : 0.0;
          const double near_sigma =
              nearest >= 0 ? (*loc)[static_cast<size_t>(nearest)].desc.sigma
                           : level_mean;
          blend_b = h * near_sigma + (1.0 - h) * level_mean;
        }
      }
      blend_a = g_prev * deeper + (1.0 - g_prev) * blend_b;
    }
  }
  out.sigma1 = fk * blend_a + (1.0 - fk);
  out.s = join_ramp(out.sigma1 / out.sigma2, config.M);
  return out;
}

// Greedy minimum-distance matching of projection atoms to per-site
// centers; sites outnumbering atoms stay unmatched.
std::vector<int> match_sites(const AtomicMeasure& atoms,
                             const std::vector<LocalScale>& sites) {
  std::vector<std::tuple<double, int, int>> edges;
  for (int i = 0; i < atoms.size(); ++i) {
    for (size_t j = 0; j < sites.size(); ++j) {
      edges.emplace_back(
          geodesic_distance(atoms.atom(i).point, sites[j].desc.beta), i,
          static_cast<int>(j));
    }
  }
  std::sort(edges.begin(), edges.end());
  std::vector<int> match(static_cast<size_t>(atoms.size()), -1);
  std::vector<char> used(sites.size(), 0);
  int assigned = 0;
  for (const auto& [d, i, j] : edges) {
    if (match[static_cast<size_t>(i)] >= 0 || used[static_cast<size_t>(j)]) {
      continue;
    }
    match[static_cast<size_t>(i)] = j;
    used[static_cast<size_t>(j)] = 1;
    if (++assigned == atoms.size()) break;
  }
  return match;
}

}  // namespace

GlobalScales global_scales(const Density& f1, const Density& f2, int k,
                           const ConstantsConfig& config) {
  return scales_from_context(build_context(f1, f2, k, config), config);
}

GlobalScales global_scales(const SphereMesh& mesh, const Eigen::VectorXd& u1,
                           const Eigen::VectorXd& u2, int k,
                           const ConstantsConfig& config) {
  return global_scales(Density::from_log_field(mesh, u1),
                       Density::from_log_field(mesh, u2), k, config);
}

JoinElement refined_projection(const Density& f1, const Density& f2, int k,
                               const ConstantsConfig& config) {
  const ScaleContext ctx = build_context(f1, f2, k, config);
  const bool side1 = ctx.raw1[static_cast<size_t>(k)] < 2.0 * config.eps(k);
  const bool side2 = ctx.locs2.has_value();
  if (!side1 && !side2) {
    throw DomainError(
        "refined_projection: neither density is close to its stratum");
  }
  const GlobalScales gs = scales_from_context(ctx, config);
  double s = gs.s;

  AtomicMeasure nu = AtomicMeasure::dirac(
      side2 ? (*ctx.locs2)[0].desc.beta
            : SurfacePoint::on_sphere(Vec3(0, 0, kSphereRadius)));
  if (side1) {
    const AtomicMeasure projected = project_psi_k(f1, k, config);
    const double d_prev =
        (k >= 2) ? ctx.mono1[static_cast<size_t>(k - 1)] : kInf;
    const auto& sites = ctx.locs1[static_cast<size_t>(k)];
    if (d_prev <= config.eps(k - 1 >= 1 ? k - 1 : 1) && k >= 2) {
      nu = projected;
    } else if (!sites.has_value()) {
      nu = projected;
    } else {
      const double eps_prev = (k >= 2) ? config.eps(k - 1) : config.eps(1);
      const double t =
          (k >= 2) ? clamp01(d_prev / eps_prev - 1.0) : 1.0;
      const std::vector<int> match = match_sites(projected, *sites);
      std::vector<Atom> atoms;
      for (int i = 0; i < projected.size(); ++i) {
        const Atom& a = projected.atom(i);
        const int j = match[static_cast<size_t>(i)];
        const SurfacePoint target =
            j >= 0 ? (*sites)[static_cast<size_t>(j)].desc.beta : a.point;
        atoms.push_back(Atom{geodesic_point(a.point, target, t), a.weight});
      }
      nu = AtomicMeasure(std::move(atoms));
    }
  } else {
    s = 1.0;  // the atomic side is undefined: endpoint of the join
  }

  SurfacePoint z = nu.atom(0).point;
  if (side2) {
    z = (*ctx.locs2)[0].desc.beta;
  } else {
    s = 0.0;  // the point side is undefined: the other endpoint
    z = antipode(nu.atom(0).point);
  }
  return JoinElement(nu, z, s);
}

JoinElement refined_projection(const SphereMesh& mesh,
                               const Eigen::VectorXd& u1,
                               const Eigen::VectorXd& u2, int k,
                               const ConstantsConfig& config) {
  return refined_projection(Density::from_log_field(mesh, u1),
                            Density::from_log_field(mesh, u2), k, config);
}

std::vector<LocalizedDensity> concentration_corpus(
    const ConstantsConfig& config) {
  (void)config;
  std::vector<LocalizedDensity> out;
  const std::vector<SurfacePoint> centers = {
      SurfacePoint::on_sphere(Vec3(0.3, -0.2, 0.93)),
      SurfacePoint::on_sphere(Vec3(-0.7, 0.5, 0.1)),
      SurfacePoint::on_sphere(Vec3(0.1, 0.9, -0.4)),
      SurfacePoint::on_sphere(Vec3(-0.2, -0.8, -0.55))};

  // 40 single peaks across three decades of sharpness.
  for (int i = 0; i < 40; ++i) {
    const double lam = std::pow(10.0, 1.0 + 3.0 * i / 39.0);
    const SurfacePoint& c = centers[static_cast<size_t>(i % 4)];
    const double r = (i % 2 == 0) ? 0.05 : 0.02;
    out.push_back(localize(Density::single_peak(lam, c), c, r));
  }
  // 15 uniform discs of growing radius.
  for (int i = 0; i < 15; ++i) {
    const SurfacePoint& c = centers[static_cast<size_t>(i % 4)];
    const double r = 0.05;
    Density d;
    d.add_uniform(Density::UniformPatch{c, r * (0.2 + 0.05 * i), 1.0});
    out.push_back(localize(d, c, r));
  }
  // 15 two-site mixtures inside one ball.
  for (int i = 0; i < 15; ++i) {
    const SurfacePoint& c = centers[static_cast<size_t>(i % 4)];
    const double r = 0.05;
    const SurfacePoint q = exp_map(c, (r / 3.0) * tangent_basis(c)[0]);
    const double lam_a = (i % 3 == 0) ? 200.0 : 800.0;
    const double lam_b = (i % 2 == 0) ? 2000.0 : 400.0;
    Density d;
    Density::Core a = Density::single_peak(lam_a, c).cores()[0];
    a.mass = 0.7;
    Density::Core b = Density::single_peak(lam_b, q).cores()[0];
    b.mass = 0.3;
    d.add_core(a);
    d.add_core(b);
    out.push_back(localize(d, c, r));
  }
  // 10 off-center peaks.
  for (int i = 0; i < 10; ++i) {
    const SurfacePoint& c = centers[static_cast<size_t>(i % 4)];
    const double r = 0.05;
    const SurfacePoint q = exp_map(c, (r / 2.0) * tangent_basis(c)[1]);
    const double lam = 100.0 * (i + 1);
    out.push_back(localize(Density::single_peak(lam, q), c, r));
  }
  // 10 peak-plus-floor blends.
  for (int i = 0; i < 10; ++i) {
    const SurfacePoint& c = centers[static_cast<size_t>(i % 4)];
    const double r = 0.05;
    Density d;
    Density::Core a =
        Density::single_peak(150.0 * (i + 1), c).cores()[0];
    a.mass = 0.8;
    d.add_core(a);
    d.add_uniform(Density::UniformPatch{c, 0.9 * r, 0.2});
    out.push_back(localize(d, c, r));
  }
  // 10 broad peaks near the resolution of the ball itself.
  for (int i = 0; i < 10; ++i) {
    const SurfacePoint& c = centers[static_cast<size_t>(i % 4)];
    const double lam = 20.0 + 4.0 * i;
    out.push_back(localize(Density::single_peak(lam, c), c, 0.05));
  }
  return out;
}

}  // namespace toda
