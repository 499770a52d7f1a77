#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "insardet/parallel.hpp"
#include "insardet/pipeline.hpp"

namespace insardet {

ProbabilityMap probability_map(const DenseVelocityGrid& grid, const CnnModel& model, const DetectConfig& cfg) {
  cfg.wrap.validate();
  cfg.patch.validate();
  if (cfg.patch.patch_size != model.architecture().input_size)
    throw std::invalid_argument("patch size does not match the model input size");
  const auto& spec = grid.spec();
  const int P = cfg.patch.patch_size;
  // Small grids are reflect-padded to one patch; the map is cropped back.
  const int H = std::max(spec.height, P), W = std::max(spec.width, P);
  const GridSpec padded{W, H, spec.pixel_size, spec.origin_x, spec.origin_y};

  struct Member {
    double mu, offset;
    Raster<std::uint8_t> image;
  };
  std::vector<Member> members;
  for (double mu : cfg.wrap.intervals)
    for (double tau : cfg.wrap.offsets(mu))
      members.push_back({mu, tau, reflect_pad(wrap_gray(grid.values(), mu, tau), H, W)});

  const auto origins = patch_origins(H, W, cfg.patch);
  const std::size_t n_tasks = members.size() * origins.size();
  std::vector<double> probs(n_tasks);
  parallel_for(n_tasks, cfg.jobs, [&](std::size_t t) {
    const auto& img = members[t / origins.size()].image;
    const auto& o = origins[t % origins.size()];
    Raster<std::uint8_t> patch(P, P);
    for (int r = 0; r < P; ++r)
      std::copy_n(&img(o.row + r, o.col), P, &patch(r, 0));
    probs[t] = model.predict(patch);
  });

  const std::size_t n_off = static_cast<std::size_t>(cfg.wrap.offsets_per_interval);
  std::vector<std::vector<ProbabilityMap>> maps(cfg.wrap.intervals.size());
  for (std::size_t m = 0; m < members.size(); ++m) {
    std::vector<PatchResult> results;
    for (std::size_t k = 0; k < origins.size(); ++k)
      results.push_back({origins[k].row, origins[k].col, probs[m * origins.size() + k]});
    auto merged = merge_patch_probs(results, padded, P, cfg.kernel);
    ProbabilityMap cropped(spec);
    for (int r = 0; r < spec.height; ++r)
      for (int c = 0; c < spec.width; ++c) cropped.values(r, c) = merged.values(r, c);
    cropped.provenance = "mu=" + std::to_string(members[m].mu) + ",offset=" + std::to_string(members[m].offset);
    maps[m / n_off].push_back(std::move(cropped));
  }
  return fuse_ensemble(maps, n_off);
}

ProbabilityMap look_probability(const SparseVelocityField& field, const CnnModel& model, const DetectConfig& cfg) {
  const auto& spec = field.spec();
  const auto tiles = tile_map(field, cfg.tile, cfg.patch.patch_size);
  std::vector<ProbabilityMap> tile_maps;
  for (const auto& t : tiles) {
    const auto where = "tile (" + std::to_string(t.row) + "," + std::to_string(t.col) + ")";
    const GridSpec ts = spec.window(t.row, t.col, t.rows, t.cols);
    SparseVelocityField sub(ts);
    for (int r = 0; r < t.rows; ++r)
      for (int c = 0; c < t.cols; ++c)
        if (field.observed(t.row + r, t.col + c)) sub.set(r, c, field.value(t.row + r, t.col + c));
    if (sub.count() < 3) {  // nothing to interpolate
      tile_maps.emplace_back(ts, "empty");
      continue;
    }
    DenseVelocityGrid dense;
    try {
      dense = matrix_complete(sub, cfg.mc);
    } catch (const std::exception& e) {
      throw std::runtime_error(where + " completion: " + e.what());
    }
    try {
      tile_maps.push_back(probability_map(dense, model, cfg));
    } catch (const std::exception& e) {
      throw std::runtime_error(where + " inference: " + e.what());
    }
  }
  return reassemble(spec, tiles, tile_maps);
}

DetectResult detect(const std::vector<Look>& looks, const CnnModel& model, const DetectConfig& cfg) {
  if (looks.empty()) throw std::invalid_argument("no looks to process");
  DetectResult result;
  std::vector<ProbabilityMap> asc, desc;
  for (std::size_t i = 0; i < looks.size(); ++i) {
    auto map = look_probability(looks[i].field, model, cfg);
    map.provenance = (looks[i].pass == Pass::ascending ? "asc" : "desc") + std::to_string(i);
    (looks[i].pass == Pass::ascending ? asc : desc).push_back(map);
    result.look_maps.push_back(std::move(map));
  }
  result.fused = combine_looks(asc, desc);
  result.fused.provenance = "fused";
  result.detections = extract_detections(result.fused, cfg.levels);
  return result;
}

double scene_probability(const Raster<double>& values, const CnnModel& model, const WrapConfig& wrap) {
  wrap.validate();
  const int P = model.architecture().input_size;
  if (values.rows() < P || values.cols() < P) throw std::invalid_argument("scene smaller than the model input");
  const int r0 = (values.rows() - P) / 2, c0 = (values.cols() - P) / 2;
  Raster<double> crop(P, P);
  for (int r = 0; r < P; ++r)
    for (int c = 0; c < P; ++c) crop(r, c) = values(r0 + r, c0 + c);
  double total = 0.0;
  for (double mu : wrap.intervals) {
    double best = 0.0;
    for (double tau : wrap.offsets(mu)) best = std::max(best, model.predict(wrap_gray(crop, mu, tau)));
    total += best;
  }
  return total / static_cast<double>(wrap.intervals.size());
}

}  // namespace insardet
