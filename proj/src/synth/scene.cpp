#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "insardet/synth.hpp"

namespace insardet {

namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

double peak_abs(const DenseVelocityGrid& g) {
  double m = 0.0;
  for (double v : g.values()) m = std::max(m, std::abs(v));
  return m;
}

constexpr int kMaxDraws = 10'000;

}  // namespace

Raster<std::uint8_t> generate_layout(const GridSpec& spec, const LayoutConfig& cfg, Rng& rng) {
  spec.validate();
  if (!(cfg.background_density_min >= 0.0 && cfg.background_density_min <= cfg.background_density_max &&
        cfg.background_density_max <= 1.0))
    throw std::invalid_argument("invalid background density range");
  if (!(cfg.cluster_peak_density >= 0.0 && cfg.cluster_peak_density <= 1.0))
    throw std::invalid_argument("invalid cluster peak density");

  const double bg = uniform(rng, cfg.background_density_min, cfg.background_density_max);
  const double area_km2 = spec.size() * spec.pixel_size * spec.pixel_size * 1e-6;
  const int n_clusters = std::poisson_distribution<int>(cfg.clusters_per_km2 * area_km2)(rng);

  struct Cluster {
    double x, y, radius;
  };
  std::vector<Cluster> clusters;
  const double w = spec.width * spec.pixel_size, h = spec.height * spec.pixel_size;
  for (int i = 0; i < n_clusters; ++i) {
    const double x = spec.origin_x + uniform(rng, 0.0, w);
    const double y = spec.origin_y - uniform(rng, 0.0, h);
    clusters.push_back({x, y, uniform(rng, cfg.cluster_radius_min_m, cfg.cluster_radius_max_m)});
  }

  Raster<std::uint8_t> mask(spec.height, spec.width, 0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      double miss = 1.0 - bg;
      for (const auto& cl : clusters) {
        const double dx = spec.cell_x(c) - cl.x, dy = spec.cell_y(r) - cl.y;
        miss *= 1.0 - cfg.cluster_peak_density * std::exp(-(dx * dx + dy * dy) / (2.0 * cl.radius * cl.radius));
      }
      mask(r, c) = u01(rng) < 1.0 - miss ? 1 : 0;
    }
  }
  return mask;
}

NoiseStats reference_noise_stats(std::uint64_t seed) {
  constexpr int n = 128;
  constexpr double nugget = 0.5;
  constexpr double spike_rate = 0.02;
  GridSpec spec{n, n, 10.0, 0.0, n * 10.0};
  Rng rng(mix_seed(seed));
  std::normal_distribution<double> normal(0.0, std::sqrt(nugget));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Raster<double> values(n, n);
  for (auto& v : values) {
    v = normal(rng);
    if (u01(rng) < spike_rate) v += (u01(rng) < 0.5 ? -1.0 : 1.0) * (3.0 + 7.0 * u01(rng));
  }
  SparseVelocityField field(spec, std::move(values));
  return extract_noise(field, median_filter_nan(field), nugget);
}

std::string to_string(SceneClass c) { return c == SceneClass::point ? "point" : "line"; }

SceneClass scene_class_from_string(const std::string& s) {
  if (s == "point") return SceneClass::point;
  if (s == "line") return SceneClass::line;
  throw std::invalid_argument("unknown scene class: " + s);
}

SyntheticScene compose_scene(const DenseVelocityGrid& deformation, const DenseVelocityGrid& atmosphere,
                             const Raster<std::uint8_t>& layout, const NoiseStats& noise, Rng& rng,
                             const ComposeOptions& opts) {
  const auto& spec = deformation.spec();
  if (!(atmosphere.spec() == spec) || !layout.same_shape(deformation.values()))
    throw std::invalid_argument("scene components have different shapes");
  if (std::none_of(layout.begin(), layout.end(), [](std::uint8_t m) { return m != 0; }))
    throw std::invalid_argument("empty layout");

  SyntheticScene scene;
  scene.deformation = deformation;
  scene.atmosphere = atmosphere;
  scene.composed = DenseVelocityGrid(spec);
  for (std::size_t i = 0; i < spec.size(); ++i)
    scene.composed.values()[i] = deformation.values()[i] + atmosphere.values()[i];

  scene.sparse = sample(scene.composed, layout);
  const auto spikes = noise.impulses();
  if (!spikes.empty() && noise.impulse_rate > 0.0) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, spikes.size() - 1);
    for (int r = 0; r < spec.height; ++r)
      for (int c = 0; c < spec.width; ++c)
        if (scene.sparse.observed(r, c) && u01(rng) < noise.impulse_rate)
          scene.sparse.set(r, c, scene.sparse.value(r, c) + spikes[pick(rng)]);
  }

  if (opts.with_delaunay) scene.delaunay = delaunay_interpolate(scene.sparse);
  if (opts.with_completion) {
    scene.mc_report = matrix_complete_detailed(scene.sparse, opts.mc);
    scene.interpolated = scene.mc_report.grid;
  }
  scene.label = peak_abs(deformation) > 0.0 ? Label::positive : Label::negative;
  return scene;
}

SceneGenerator::SceneGenerator(SynthConfig cfg, std::uint64_t seed, NoiseStats noise)
    : cfg_(std::move(cfg)), seed_(seed), noise_(std::move(noise)) {
  cfg_.grid.validate();
  if (!(cfg_.depth_min > 0.0 && cfg_.depth_min <= cfg_.depth_max)) throw std::invalid_argument("invalid depth range");
  if (!(cfg_.log10_volume_min <= cfg_.log10_volume_max)) throw std::invalid_argument("invalid volume range");
  if (!(cfg_.los_min >= 0.0 && cfg_.los_min < cfg_.los_max)) throw std::invalid_argument("invalid LOS range");
  if (!(cfg_.a_min > 0.0 && cfg_.a_min <= cfg_.a_max && cfg_.a_max <= cfg_.sill_max && cfg_.sill_min <= cfg_.sill_max))
    throw std::invalid_argument("invalid atmosphere ranges");
  if (!(cfg_.l_sag_min > 0.0 && cfg_.l_hog_min > 0.0 && cfg_.d_sag_min >= 0.0 && cfg_.d_hog_min >= 0.0))
    throw std::invalid_argument("invalid tunnel ranges");
}

MogiSource SceneGenerator::draw_mogi(Rng& rng, const LosGeometry& geom, double& peak) const {
  const auto& g = cfg_.grid;
  const double w = g.width * g.pixel_size, h = g.height * g.pixel_size;
  const double m = cfg_.source_margin;
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    MogiSource s;
    s.x = g.origin_x + uniform(rng, m * w, (1 - m) * w);
    s.y = g.origin_y - uniform(rng, m * h, (1 - m) * h);
    s.depth = uniform(rng, cfg_.depth_min, cfg_.depth_max);
    const double sign = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    s.volume_change = sign * std::pow(10.0, uniform(rng, cfg_.log10_volume_min, cfg_.log10_volume_max));
    // The peak sits near the source; checking the analytic uplift first
    // skips the grid evaluation for most rejected draws.
    if (mogi_uplift(s, 0.0) * 0.5 > cfg_.los_max || mogi_uplift(s, 0.0) * 1.5 < cfg_.los_min) continue;
    peak = peak_abs(project_los(mogi_displacement(s, g), geom));
    if (peak >= cfg_.los_min && peak <= cfg_.los_max) return s;
  }
  throw std::runtime_error("no point source satisfies the LOS range");
}

TunnelModel SceneGenerator::draw_tunnel(Rng& rng, const LosGeometry& geom, double& peak) const {
  const auto& g = cfg_.grid;
  const double w = g.width * g.pixel_size, h = g.height * g.pixel_size;
  const double cx = g.origin_x + 0.5 * w, cy = g.origin_y - 0.5 * h;
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    // A track through the central region, straight or gently curved.
    const double theta = uniform(rng, 0.0, std::numbers::pi);
    const double ux = std::cos(theta), uy = std::sin(theta);
    const double offset = uniform(rng, -cfg_.source_margin, cfg_.source_margin) * std::min(w, h);
    const double half = 0.75 * std::hypot(w, h);
    const double bend = uniform(rng, 0.0, 1.0) < 0.5 ? 0.0 : uniform(rng, -0.2, 0.2) * std::min(w, h);
    const int n_vertices = std::uniform_int_distribution<int>(2, 5)(rng);
    TunnelModel model;
    for (int k = 0; k < n_vertices; ++k) {
      const double s = -half + 2.0 * half * k / (n_vertices - 1);
      const double frac = s / half;
      const double lateral = offset + bend * (1.0 - frac * frac);
      TunnelVertex v;
      v.x = cx + s * ux - lateral * uy;
      v.y = cy + s * uy + lateral * ux;
      v.l_sag = uniform(rng, cfg_.l_sag_min, cfg_.l_sag_max);
      v.l_hog = uniform(rng, cfg_.l_hog_min, cfg_.l_hog_max);
      v.d_sag = uniform(rng, cfg_.d_sag_min, cfg_.d_sag_max);
      v.d_hog = uniform(rng, cfg_.d_hog_min, cfg_.d_hog_max);
      model.path.push_back(v);
    }
    peak = peak_abs(project_los(tunnel_displacement(model, g), geom));
    if (peak >= cfg_.los_min && peak <= cfg_.los_max) return model;
  }
  throw std::runtime_error("no tunnel satisfies the LOS range");
}

SceneRecord SceneGenerator::draw(std::size_t index, Label label) const {
  Rng rng = derive_rng(seed_, index);
  SceneRecord rec;
  rec.index = index;
  rec.label = label;
  rec.cls = cfg_.cls;
  rec.seed = rng();
  rec.geometry = uniform(rng, 0.0, 1.0) < cfg_.descending_fraction ? LosGeometry::descending()
                                                                   : LosGeometry::ascending();
  const double a = uniform(rng, cfg_.a_min, cfg_.a_max);
  const double sill = uniform(rng, std::max(cfg_.sill_min, a), cfg_.sill_max);
  const double b = uniform(rng, cfg_.b_min, cfg_.b_max);
  rec.atmosphere = CovarianceModel::from_sill_nugget(sill, sill - a, b);
  if (label == Label::positive) {
    if (cfg_.cls == SceneClass::point)
      rec.mogi = draw_mogi(rng, rec.geometry, rec.peak_los);
    else
      rec.tunnel = draw_tunnel(rng, rec.geometry, rec.peak_los);
  }
  return rec;
}

DenseVelocityGrid SceneGenerator::deformation(const SceneRecord& rec) const {
  if (rec.mogi) return project_los(mogi_displacement(*rec.mogi, cfg_.grid), rec.geometry);
  if (rec.tunnel) return project_los(tunnel_displacement(*rec.tunnel, cfg_.grid), rec.geometry);
  return DenseVelocityGrid(cfg_.grid, 0.0);
}

SyntheticScene SceneGenerator::build(const SceneRecord& rec) const {
  Rng rng(rec.seed);
  const auto D = deformation(rec);
  const AtmosphereSampler sampler(rec.atmosphere, cfg_.grid, cfg_.atmosphere);
  const auto T = sampler.sample(rng);
  const auto layout = generate_layout(cfg_.grid, cfg_.layout, rng);
  auto scene = compose_scene(D, T, layout, noise_, rng, cfg_.compose);
  scene.label = rec.label;
  scene.cls = rec.cls;
  return scene;
}

}  // namespace insardet
