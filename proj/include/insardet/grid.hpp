#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace insardet {

/// Georeferenced raster geometry. Origin is the north-west corner of the
/// top-left cell; rows grow southwards, columns eastwards.
struct GridSpec {
  int width = 0;
  int height = 0;
  double pixel_size = 1.0;  // metres per pixel
  double origin_x = 0.0;    // easting (m)
  double origin_y = 0.0;    // northing (m)

  void validate() const;

  std::size_t size() const { return static_cast<std::size_t>(width) * height; }
  bool contains(int row, int col) const {
    return row >= 0 && col >= 0 && row < height && col < width;
  }
  double cell_x(double col) const { return origin_x + (col + 0.5) * pixel_size; }
  double cell_y(double row) const { return origin_y - (row + 0.5) * pixel_size; }

  /// Continuous (row, col) coordinate of a map point, cell centres at x.5.
  std::pair<double, double> to_pixel(double x, double y) const {
    return {(origin_y - y) / pixel_size, (x - origin_x) / pixel_size};
  }

  /// Sub-grid starting at (row, col) of the given size.
  GridSpec window(int row, int col, int rows, int cols) const;

  bool operator==(const GridSpec&) const = default;
};

/// Row-major 2-D array.
template <class T>
class Raster {
 public:
  Raster() = default;
  Raster(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("negative raster shape");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const T& operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  template <class U>
  bool same_shape(const Raster<U>& o) const {
    return rows_ == o.rows() && cols_ == o.cols();
  }
  bool operator==(const Raster&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// Scattered velocity samples (mm/yr) on a grid. A cell is observed exactly
/// when its value is finite; the mask is derived, never set independently.
class SparseVelocityField {
 public:
  SparseVelocityField() = default;
  explicit SparseVelocityField(GridSpec spec);
  SparseVelocityField(GridSpec spec, Raster<double> values);

  const GridSpec& spec() const { return spec_; }
  const Raster<double>& values() const { return values_; }
  const Raster<std::uint8_t>& mask() const { return mask_; }

  bool observed(int r, int c) const { return mask_(r, c) != 0; }
  double value(int r, int c) const { return values_(r, c); }
  std::size_t count() const { return count_; }

  void set(int r, int c, double v);
  void clear(int r, int c) { set(r, c, kMissing); }

 private:
  GridSpec spec_;
  Raster<double> values_;
  Raster<std::uint8_t> mask_;
  std::size_t count_ = 0;
};

/// Fully populated velocity raster (mm/yr).
class DenseVelocityGrid {
 public:
  DenseVelocityGrid() = default;
  explicit DenseVelocityGrid(GridSpec spec, double fill = 0.0);
  DenseVelocityGrid(GridSpec spec, Raster<double> values);

  const GridSpec& spec() const { return spec_; }
  const Raster<double>& values() const { return values_; }
  Raster<double>& values() { return values_; }
  double operator()(int r, int c) const { return values_(r, c); }
  double& operator()(int r, int c) { return values_(r, c); }

  /// Throws if any value is non-finite.
  void check_finite() const;

 private:
  GridSpec spec_;
  Raster<double> values_;
};

struct Image8 {
  GridSpec spec;
  Raster<std::uint8_t> pixels;
};

struct VelocityPoint {
  double x = 0.0;  // easting (m)
  double y = 0.0;  // northing (m)
  double velocity = 0.0;
};

struct RasterizeResult {
  SparseVelocityField field;
  std::size_t dropped = 0;
};

/// Bins points into cells; cells hit by several points hold their mean.
RasterizeResult rasterize(std::span<const VelocityPoint> points, const GridSpec& spec);

/// Fixed-scale grayscale: floor(v / mu * 256) clamped to 255. Values must
/// already be wrapped into [0, mu).
Image8 to_grayscale(const DenseVelocityGrid& wrapped, double wrap_interval);

/// Restricts a dense grid to the cells of a 0/1 mask.
SparseVelocityField sample(const DenseVelocityGrid& grid, const Raster<std::uint8_t>& mask);

}  // namespace insardet
