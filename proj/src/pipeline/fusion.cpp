#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "insardet/pipeline.hpp"

namespace insardet {

namespace {

void require_same_spec(const ProbabilityMap& a, const ProbabilityMap& b) {
  if (!(a.spec == b.spec) || !a.values.same_shape(b.values))
    throw std::invalid_argument("probability maps are not co-registered");
}

}  // namespace

ProbabilityMap merge_patch_probs(const std::vector<PatchResult>& patches, const GridSpec& spec, int patch_size,
                                 const MergeKernel& kernel) {
  if (patches.empty()) throw std::invalid_argument("no patch results to merge");
  if (patch_size < 1 || kernel.size < 1 || !(kernel.sigma > 0.0)) throw std::invalid_argument("invalid merge kernel");

  // Separable weights along one patch axis, in kernel cell units.
  std::vector<double> w1(patch_size);
  for (int i = 0; i < patch_size; ++i) {
    const double u = (i + 0.5) / patch_size * kernel.size - 0.5 * kernel.size;
    w1[i] = std::exp(-u * u / (2.0 * kernel.sigma * kernel.sigma));
  }

  Raster<double> num(spec.height, spec.width, 0.0), den(spec.height, spec.width, 0.0);
  for (const auto& p : patches) {
    if (!(p.probability >= 0.0 && p.probability <= 1.0)) throw std::invalid_argument("patch probability outside [0,1]");
    const int r0 = std::max(0, p.row), r1 = std::min(spec.height, p.row + patch_size);
    const int c0 = std::max(0, p.col), c1 = std::min(spec.width, p.col + patch_size);
    for (int r = r0; r < r1; ++r) {
      const double wr = w1[r - p.row];
      for (int c = c0; c < c1; ++c) {
        const double w = wr * w1[c - p.col];
        num(r, c) += w * p.probability;
        den(r, c) += w;
      }
    }
  }
  ProbabilityMap out(spec, "merged");
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = den[i] > 0.0 ? std::clamp(num[i] / den[i], 0.0, 1.0) : 0.0;
  return out;
}

ProbabilityMap fuse_ensemble(const std::vector<std::vector<ProbabilityMap>>& maps, std::size_t offsets_per_interval) {
  if (maps.empty() || offsets_per_interval == 0) throw std::invalid_argument("missing ensemble member");
  for (const auto& row : maps)
    if (row.size() != offsets_per_interval) throw std::invalid_argument("missing ensemble member");
  const auto& ref = maps.front().front();
  ProbabilityMap out(ref.spec, "fused");
  Raster<double> p_mu(ref.values.rows(), ref.values.cols());
  for (const auto& row : maps) {
    std::fill(p_mu.begin(), p_mu.end(), 0.0);
    for (const auto& m : row) {
      require_same_spec(ref, m);
      for (std::size_t i = 0; i < p_mu.size(); ++i) p_mu[i] = std::max(p_mu[i], m.values[i]);
    }
    for (std::size_t i = 0; i < p_mu.size(); ++i) out.values[i] += p_mu[i];
  }
  for (auto& v : out.values) v /= static_cast<double>(maps.size());
  return out;
}

ProbabilityMap combine_looks(const std::vector<ProbabilityMap>& asc, const std::vector<ProbabilityMap>& desc) {
  const std::size_t total = asc.size() + desc.size();
  if (total == 1) {
    ProbabilityMap out = asc.empty() ? desc.front() : asc.front();
    out.provenance = "combined";
    return out;
  }
  if (!(asc.size() == desc.size() && (asc.size() == 1 || asc.size() == 2)))
    throw std::invalid_argument("unsupported look count: need 1, 2 (asc+desc) or 4 (2 asc + 2 desc) looks");
  const auto& ref = asc.front();
  for (const auto& m : asc) require_same_spec(ref, m);
  for (const auto& m : desc) require_same_spec(ref, m);
  ProbabilityMap out(ref.spec, "combined");
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    double best = 0.0;
    for (const auto& a : asc)
      for (const auto& d : desc) best = std::max(best, 0.5 * (a.values[i] + d.values[i]));
    out.values[i] = best;
  }
  return out;
}

std::vector<Tile> tile_map(int rows, int cols, int tile, int overlap) {
  if (tile < 1 || overlap < 0 || overlap >= tile) throw std::invalid_argument("tile must exceed the overlap");
  auto axis = [&](int n) {
    std::vector<std::pair<int, int>> out;  // (start, length)
    if (n <= tile) return std::vector<std::pair<int, int>>{{0, n}};
    const int step = tile - overlap;
    const int count = (n - overlap + step - 1) / step;
    for (int k = 0; k < count; ++k) out.push_back({std::min(k * step, n - tile), tile});
    return out;
  };
  std::vector<Tile> tiles;
  for (auto [r, h] : axis(rows))
    for (auto [c, w] : axis(cols)) tiles.push_back({r, c, h, w});
  return tiles;
}

std::vector<Tile> tile_map(const SparseVelocityField& field, int tile, int overlap) {
  return tile_map(field.spec().height, field.spec().width, tile, overlap);
}

ProbabilityMap reassemble(const GridSpec& spec, const std::vector<Tile>& tiles,
                          const std::vector<ProbabilityMap>& tile_maps) {
  if (tiles.size() != tile_maps.size()) throw std::invalid_argument("one map per tile required");
  Raster<double> sum(spec.height, spec.width, 0.0);
  Raster<int> count(spec.height, spec.width, 0);
  for (std::size_t k = 0; k < tiles.size(); ++k) {
    const auto& t = tiles[k];
    const auto& m = tile_maps[k].values;
    if (m.rows() != t.rows || m.cols() != t.cols) throw std::invalid_argument("tile map shape mismatch");
    for (int r = 0; r < t.rows; ++r)
      for (int c = 0; c < t.cols; ++c) {
        sum(t.row + r, t.col + c) += m(r, c);
        ++count(t.row + r, t.col + c);
      }
  }
  ProbabilityMap out(spec, "reassembled");
  for (std::size_t i = 0; i < sum.size(); ++i) out.values[i] = count[i] ? sum[i] / count[i] : 0.0;
  return out;
}

std::vector<Detection> extract_detections(const ProbabilityMap& map, const std::vector<double>& levels) {
  const auto& spec = map.spec;
  const int H = map.values.rows(), W = map.values.cols();
  const double px_km2 = spec.pixel_size * spec.pixel_size * 1e-6;
  std::vector<Detection> out;
  Raster<std::uint8_t> seen(H, W);
  std::vector<std::pair<int, int>> stack;
  for (double level : levels) {
    std::fill(seen.begin(), seen.end(), 0);
    for (int r0 = 0; r0 < H; ++r0) {
      for (int c0 = 0; c0 < W; ++c0) {
        if (seen(r0, c0) || !(map.values(r0, c0) > level)) continue;
        Detection d;
        d.level = level;
        double wsum = 0.0, wx = 0.0, wy = 0.0;
        stack.assign(1, {r0, c0});
        seen(r0, c0) = 1;
        while (!stack.empty()) {
          const auto [r, c] = stack.back();
          stack.pop_back();
          const double p = map.values(r, c);
          ++d.pixels;
          d.max_probability = std::max(d.max_probability, p);
          wsum += p;
          wx += p * spec.cell_x(c);
          wy += p * spec.cell_y(r);
          for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
              const int rr = r + dr, cc = c + dc;
              if (rr < 0 || cc < 0 || rr >= H || cc >= W || seen(rr, cc) || !(map.values(rr, cc) > level)) continue;
              seen(rr, cc) = 1;
              stack.push_back({rr, cc});
            }
        }
        d.area_km2 = static_cast<double>(d.pixels) * px_km2;
        d.centroid_x = wx / wsum;
        d.centroid_y = wy / wsum;
        out.push_back(d);
      }
    }
  }
  return out;
}

}  // namespace insardet
