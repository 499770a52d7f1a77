#pragma once

#include <string>
#include <vector>

#include "insardet/classifier.hpp"
#include "insardet/grid.hpp"
#include "insardet/interp.hpp"
#include "insardet/synth.hpp"
#include "insardet/wrapping.hpp"

namespace insardet {

struct ProbabilityMap {
  GridSpec spec;
  Raster<double> values;   // each in [0, 1]
  std::string provenance;  // e.g. "mu=14,offset=3.5,look=asc0" or "fused"

  ProbabilityMap() = default;
  ProbabilityMap(GridSpec s, std::string prov = {})
      : spec(s), values(s.height, s.width, 0.0), provenance(std::move(prov)) {}
};

struct PatchResult {
  int row = 0;  // top-left corner
  int col = 0;
  double probability = 0.0;
};

/// Splatting kernel: a `size` x `size` Gaussian of standard deviation `sigma`
/// (kernel cells) stretched over each patch footprint.
struct MergeKernel {
  int size = 20;
  double sigma = 5.0;
};

/// Weighted average of overlapping patch probabilities; pixels no patch
/// covers are 0.
ProbabilityMap merge_patch_probs(const std::vector<PatchResult>& patches, const GridSpec& spec, int patch_size,
                                 const MergeKernel& kernel = {});

/// maps[i][j] belongs to interval i and offset j. P_mu is the max over
/// offsets and the result the mean of P_mu over intervals.
ProbabilityMap fuse_ensemble(const std::vector<std::vector<ProbabilityMap>>& maps, std::size_t offsets_per_interval);

/// One look passes through, one ascending plus one descending look are
/// averaged, two of each give the max over the four pair means.
ProbabilityMap combine_looks(const std::vector<ProbabilityMap>& ascending,
                             const std::vector<ProbabilityMap>& descending);

struct Tile {
  int row = 0;
  int col = 0;
  int rows = 0;
  int cols = 0;
};

/// Tiles of side `tile` overlapping by `overlap` pixels; the last tile on
/// each axis is shifted back to end at the map edge.
std::vector<Tile> tile_map(int rows, int cols, int tile, int overlap);
std::vector<Tile> tile_map(const SparseVelocityField& field, int tile, int overlap);

/// Averages tile maps where they overlap.
ProbabilityMap reassemble(const GridSpec& spec, const std::vector<Tile>& tiles,
                          const std::vector<ProbabilityMap>& tile_maps);

struct Detection {
  double centroid_x = 0.0;  // easting (m), probability-weighted
  double centroid_y = 0.0;  // northing (m)
  double area_km2 = 0.0;
  double max_probability = 0.0;
  double level = 0.0;
  std::size_t pixels = 0;
};

inline const std::vector<double> kDetectionLevels{0.5, 0.75, 0.9};

/// 8-connected components of P > level, for every level.
std::vector<Detection> extract_detections(const ProbabilityMap& map,
                                          const std::vector<double>& levels = kDetectionLevels);

struct DetectConfig {
  PatchSpec patch;
  WrapConfig wrap;
  MergeKernel kernel;
  McParams mc;
  int tile = 512;
  int jobs = 1;
  std::vector<double> levels = kDetectionLevels;
};

struct Look {
  Pass pass = Pass::ascending;
  SparseVelocityField field;
};

struct DetectResult {
  ProbabilityMap fused;
  std::vector<ProbabilityMap> look_maps;
  std::vector<Detection> detections;
};

/// Probability map of one dense velocity grid: wrap ensemble, patch
/// inference, merging and ensemble fusion.
ProbabilityMap probability_map(const DenseVelocityGrid& grid, const CnnModel& model, const DetectConfig& cfg);

/// Full pipeline on one look: tiling, completion, probability maps,
/// reassembly.
ProbabilityMap look_probability(const SparseVelocityField& field, const CnnModel& model, const DetectConfig& cfg);

DetectResult detect(const std::vector<Look>& looks, const CnnModel& model, const DetectConfig& cfg);

/// Scene-level probability: the central model-sized crop of every ensemble
/// member is classified, then fused with the offset-max, interval-mean rule.
/// NaN cells (sparse inputs) are rendered black.
double scene_probability(const Raster<double>& values, const CnnModel& model, const WrapConfig& wrap);

}  // namespace insardet
