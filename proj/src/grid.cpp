#include "insardet/grid.hpp"

#include <algorithm>

namespace insardet {

void GridSpec::validate() const {
  if (width <= 0 || height <= 0) throw std::invalid_argument("grid dimensions must be positive");
  if (!(pixel_size > 0.0) || !std::isfinite(pixel_size))
    throw std::invalid_argument("pixel size must be positive");
}

GridSpec GridSpec::window(int row, int col, int rows, int cols) const {
  GridSpec w = *this;
  w.width = cols;
  w.height = rows;
  w.origin_x = origin_x + col * pixel_size;
  w.origin_y = origin_y - row * pixel_size;
  return w;
}

SparseVelocityField::SparseVelocityField(GridSpec spec)
    : spec_(spec),
      values_(spec.height, spec.width, kMissing),
      mask_(spec.height, spec.width, 0) {
  spec_.validate();
}

SparseVelocityField::SparseVelocityField(GridSpec spec, Raster<double> values)
    : spec_(spec), values_(std::move(values)) {
  spec_.validate();
  if (values_.rows() != spec_.height || values_.cols() != spec_.width)
    throw std::invalid_argument("value raster does not match grid");
  mask_ = Raster<std::uint8_t>(spec_.height, spec_.width, 0);
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (std::isfinite(values_[i])) {
      mask_[i] = 1;
      ++count_;
    } else {
      values_[i] = kMissing;
    }
  }
}

void SparseVelocityField::set(int r, int c, double v) {
  const bool was = mask_(r, c) != 0;
  const bool now = std::isfinite(v);
  values_(r, c) = now ? v : kMissing;
  mask_(r, c) = now ? 1 : 0;
  if (was && !now) --count_;
  if (!was && now) ++count_;
}

DenseVelocityGrid::DenseVelocityGrid(GridSpec spec, double fill)
    : spec_(spec), values_(spec.height, spec.width, fill) {
  spec_.validate();
}

DenseVelocityGrid::DenseVelocityGrid(GridSpec spec, Raster<double> values)
    : spec_(spec), values_(std::move(values)) {
  spec_.validate();
  if (values_.rows() != spec_.height || values_.cols() != spec_.width)
    throw std::invalid_argument("value raster does not match grid");
}

void DenseVelocityGrid::check_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) throw std::runtime_error("dense grid contains non-finite values");
}

RasterizeResult rasterize(std::span<const VelocityPoint> points, const GridSpec& spec) {
  spec.validate();
  if (points.empty()) throw std::invalid_argument("no data");

  Raster<double> sum(spec.height, spec.width, 0.0);
  Raster<int> hits(spec.height, spec.width, 0);
  std::size_t dropped = 0;
  for (const auto& p : points) {
    const auto [fr, fc] = spec.to_pixel(p.x, p.y);
    const int r = static_cast<int>(std::floor(fr));
    const int c = static_cast<int>(std::floor(fc));
    if (!std::isfinite(p.velocity) || !std::isfinite(fr) || !std::isfinite(fc) ||
        !spec.contains(r, c)) {
      ++dropped;
      continue;
    }
    sum(r, c) += p.velocity;
    hits(r, c) += 1;
  }

  Raster<double> values(spec.height, spec.width, kMissing);
  for (std::size_t i = 0; i < values.size(); ++i)
    if (hits[i] > 0) values[i] = sum[i] / hits[i];
  return {SparseVelocityField(spec, std::move(values)), dropped};
}

Image8 to_grayscale(const DenseVelocityGrid& wrapped, double wrap_interval) {
  if (!(wrap_interval > 0.0)) throw std::invalid_argument("wrap interval must be positive");
  const auto& v = wrapped.values();
  Image8 out{wrapped.spec(), Raster<std::uint8_t>(v.rows(), v.cols(), 0)};
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = v[i];
    if (!(x >= 0.0 && x < wrap_interval)) throw std::domain_error("unwrapped input");
    const double level = std::floor(x / wrap_interval * 256.0);
    out.pixels[i] = static_cast<std::uint8_t>(std::min(level, 255.0));
  }
  return out;
}

SparseVelocityField sample(const DenseVelocityGrid& grid, const Raster<std::uint8_t>& mask) {
  const auto& v = grid.values();
  if (!v.same_shape(mask)) throw std::invalid_argument("mask shape mismatch");
  Raster<double> values(v.rows(), v.cols(), kMissing);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (mask[i]) values[i] = v[i];
  return SparseVelocityField(grid.spec(), std::move(values));
}

}  // namespace insardet
