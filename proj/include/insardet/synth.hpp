#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "insardet/covariogram.hpp"
#include "insardet/grid.hpp"
#include "insardet/interp.hpp"
#include "insardet/random.hpp"

namespace insardet {

/// Surface displacement components in mm.
struct Displacement3D {
  GridSpec spec;
  Raster<double> east;
  Raster<double> north;
  Raster<double> up;

  explicit Displacement3D(const GridSpec& s)
      : spec(s), east(s.height, s.width, 0.0), north(s.height, s.width, 0.0), up(s.height, s.width, 0.0) {}
};

/// Point pressure source in an elastic half-space.
struct MogiSource {
  double x = 0.0;              // easting (m)
  double y = 0.0;              // northing (m)
  double depth = 10.0;         // m
  double volume_change = 1.0;  // m^3, negative for deflation
  double poisson_ratio = 0.25;
};

/// Closed-form point-source solution:
///   u_z = (1-nu) dV d / (pi R^3),  u_r = (1-nu) dV r / (pi R^3),  R^2 = r^2 + d^2.
Displacement3D mogi_displacement(const MogiSource& source, const GridSpec& spec);
/// Vertical displacement (mm) at horizontal distance r (m).
double mogi_uplift(const MogiSource& source, double r);

struct TunnelVertex {
  double x = 0.0;      // easting (m)
  double y = 0.0;      // northing (m)
  double l_sag = 50;   // sagging zone width (m)
  double l_hog = 50;   // hogging band width per side (m)
  double d_sag = 5;    // trough depth (mm)
  double d_hog = 2;    // hogging bump height (mm)
};

/// Tunnel track; profile parameters are interpolated linearly along each
/// segment between its two vertices.
struct TunnelModel {
  std::vector<TunnelVertex> path;
  void validate() const;
};

/// Vertical settlement (mm) at transverse distance t (m) for one set of
/// profile parameters: a raised-cosine trough of half-width l_sag/2 flanked by
/// a raised-cosine bump of width l_hog. Zero beyond l_sag/2 + l_hog.
double tunnel_profile(double t, double l_sag, double l_hog, double d_sag, double d_hog);

Displacement3D tunnel_displacement(const TunnelModel& model, const GridSpec& spec);

enum class Pass { ascending, descending };

struct LosGeometry {
  double incidence_deg = 39.0;
  double heading_deg = -13.0;
  Pass pass = Pass::ascending;

  static LosGeometry ascending() { return {39.0, -13.0, Pass::ascending}; }
  static LosGeometry descending() { return {39.0, 193.0, Pass::descending}; }
  void validate() const;
};

/// Positive LOS is motion towards the satellite:
///   los = -e sin(inc) cos(head) + n sin(inc) sin(head) + u cos(inc).
DenseVelocityGrid project_los(const Displacement3D& disp, const LosGeometry& geom);

struct AtmosphereOptions {
  std::size_t direct_cap = 10'000;  // max pixels for an exact full-grid Cholesky
  std::size_t coarse_cap = 1'100;   // max nodes of the coarse grid otherwise
  double jitter = 1e-8;             // relative diagonal loading (x sill)
};

/// Gaussian random field with exponential covariance via a Cholesky factor.
/// Small grids use the full pixel covariance. Larger grids draw the
/// correlated part a*exp(-b d) on a coarse node lattice, upsample it
/// bilinearly and add the white nugget (variance sill - a) per pixel.
class AtmosphereSampler {
 public:
  AtmosphereSampler(const CovarianceModel& model, const GridSpec& spec, AtmosphereOptions opts = {});

  DenseVelocityGrid sample(Rng& rng) const;
  bool direct() const { return direct_; }
  int coarse_step() const { return step_; }

 private:
  CovarianceModel model_;
  GridSpec spec_;
  bool direct_ = true;
  int step_ = 1;
  int nodes_x_ = 0, nodes_y_ = 0;
  Eigen::MatrixXd factor_;  // lower Cholesky factor
};

DenseVelocityGrid synth_atmosphere(const CovarianceModel& model, const GridSpec& spec, std::uint64_t seed,
                                   AtmosphereOptions opts = {});

/// Urban-clustered sampling layout: a background Poisson density plus a
/// Poisson number of Gaussian-shaped dense clusters.
struct LayoutConfig {
  double background_density_min = 0.05;
  double background_density_max = 0.12;
  double clusters_per_km2 = 8.0;
  double cluster_radius_min_m = 20.0;
  double cluster_radius_max_m = 80.0;
  double cluster_peak_density = 0.7;
};

Raster<std::uint8_t> generate_layout(const GridSpec& spec, const LayoutConfig& cfg, Rng& rng);

/// Spike statistics for scenes when no real noise map is supplied: the noise
/// extractor applied to a reference field of nugget noise plus impulses.
NoiseStats reference_noise_stats(std::uint64_t seed);

enum class SceneClass { point, line };
enum class Label { negative = 0, positive = 1 };

std::string to_string(SceneClass c);
SceneClass scene_class_from_string(const std::string& s);

struct SyntheticScene {
  DenseVelocityGrid deformation;  // D, LOS mm/yr
  DenseVelocityGrid atmosphere;   // T
  DenseVelocityGrid composed;     // X = D + T
  SparseVelocityField sparse;
  DenseVelocityGrid interpolated;           // matrix completion
  std::optional<DenseVelocityGrid> delaunay;  // ablation baseline
  Label label = Label::negative;
  SceneClass cls = SceneClass::point;
  McResult mc_report;
};

struct ComposeOptions {
  McParams mc;
  bool with_delaunay = true;
  bool with_completion = true;
};

/// X = D + T, sub-sampled on `layout`, plus resampled impulse noise, then
/// interpolated.
SyntheticScene compose_scene(const DenseVelocityGrid& deformation, const DenseVelocityGrid& atmosphere,
                             const Raster<std::uint8_t>& layout, const NoiseStats& noise, Rng& rng,
                             const ComposeOptions& opts = {});

/// Parameter ranges for dataset generation.
struct SynthConfig {
  SceneClass cls = SceneClass::point;
  GridSpec grid{256, 256, 1.0, 0.0, 256.0};
  double depth_min = 3.0, depth_max = 80.0;               // m
  double log10_volume_min = 0.3, log10_volume_max = 3.0;  // m^3
  double l_sag_min = 30, l_sag_max = 80;                  // m
  double l_hog_min = 30, l_hog_max = 80;                  // m
  double d_sag_min = 1, d_sag_max = 10;                   // mm
  double d_hog_min = 1, d_hog_max = 5;                    // mm
  double los_min = 4.0;   // mm/yr, minimum peak |LOS| of a positive
  double los_max = 15.0;  // mm/yr
  double a_min = 0.7, a_max = 1.8;        // mm^2/yr^2
  double b_min = 0.8, b_max = 1.6;        // 1/km
  double sill_min = 1.5, sill_max = 2.9;  // mm^2/yr^2
  double descending_fraction = 0.5;
  double source_margin = 0.25;  // keep sources this fraction away from edges
  LayoutConfig layout;
  ComposeOptions compose;
  AtmosphereOptions atmosphere;
};

/// Everything needed to regenerate one scene.
struct SceneRecord {
  std::size_t index = 0;
  Label label = Label::negative;
  SceneClass cls = SceneClass::point;
  std::uint64_t seed = 0;
  std::optional<MogiSource> mogi;
  std::optional<TunnelModel> tunnel;
  CovarianceModel atmosphere;
  LosGeometry geometry;
  double peak_los = 0.0;
  std::size_t observed = 0;
};

/// Deterministic scene factory; scene i depends only on (seed, i).
class SceneGenerator {
 public:
  SceneGenerator(SynthConfig cfg, std::uint64_t seed, NoiseStats noise);

  /// Draws parameters for scene `index`; positives for label positive.
  SceneRecord draw(std::size_t index, Label label) const;
  /// Deformation-free LOS field of a record (all zero for negatives).
  DenseVelocityGrid deformation(const SceneRecord& rec) const;
  SyntheticScene build(const SceneRecord& rec) const;

  const SynthConfig& config() const { return cfg_; }

 private:
  MogiSource draw_mogi(Rng& rng, const LosGeometry& geom, double& peak) const;
  TunnelModel draw_tunnel(Rng& rng, const LosGeometry& geom, double& peak) const;

  SynthConfig cfg_;
  std::uint64_t seed_;
  NoiseStats noise_;
};

struct DatasetEntry {
  SceneRecord record;
  std::string sparse_path, delaunay_path, completion_path;
};

struct Dataset {
  std::filesystem::path root;
  std::vector<DatasetEntry> entries;
};

/// Writes n positives (indices 0..n-1) and n negatives (n..2n-1) as rasters
/// plus `manifest.jsonl`. Existing scene files are reused, so an interrupted
/// run can resume. `jobs` > 1 builds scenes concurrently.
Dataset generate_dataset(const SynthConfig& cfg, std::size_t n_per_class, std::uint64_t seed,
                         const std::filesystem::path& out_dir, int jobs = 1);

Dataset read_manifest(const std::filesystem::path& manifest);

}  // namespace insardet
