#pragma once

#include <vector>

#include "insardet/grid.hpp"

namespace insardet {

struct WrapConfig {
  std::vector<double> intervals{14.0, 7.0, 3.5, 1.75};  // mm/yr
  int offsets_per_interval = 4;

  void validate() const;
  /// Offsets for interval mu: k * mu / offsets_per_interval.
  std::vector<double> offsets(double mu) const;
};

/// (value + offset) mod mu, mapped into [0, mu).
double wrap_value(double value, double mu, double offset = 0.0);
DenseVelocityGrid wrap(const DenseVelocityGrid& grid, double mu, double offset = 0.0);

/// Wrapped fixed-scale grayscale of a raster in which NaN marks unobserved
/// cells; those stay 0.
Raster<std::uint8_t> wrap_gray(const Raster<double>& values, double mu, double offset = 0.0);

struct WrappedImage {
  double mu = 0.0;
  double offset = 0.0;
  Image8 image;
};

/// One grayscale image per (interval, offset), intervals outermost.
std::vector<WrappedImage> wrap_ensemble(const DenseVelocityGrid& grid, const WrapConfig& config = {});

}  // namespace insardet
