#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "insardet/grid.hpp"

namespace insardet {

/// Residual of the 3x3 NaN-aware median, N = y - Med(y), at observed cells.
struct NoiseStats {
  Raster<double> noise_map;               // NaN where unobserved
  double impulse_threshold = 0.0;         // 3 * sqrt(nugget)
  double impulse_rate = 0.0;              // fraction of observed cells above threshold
  std::vector<double> amplitude_samples;  // every observed N value, row-major order

  /// Residuals whose magnitude exceeds the impulse threshold.
  std::vector<double> impulses() const;
};

/// Each observed cell becomes the median of the observed values in its 3x3
/// neighbourhood (even counts average the two middle values).
SparseVelocityField median_filter_nan(const SparseVelocityField& field);

/// `nugget` (mm^2/yr^2) sets the impulse threshold 3*sqrt(nugget); when it is
/// not given it is estimated robustly as (1.4826 * MAD(N))^2.
NoiseStats extract_noise(const SparseVelocityField& field, const SparseVelocityField& filtered,
                         std::optional<double> nugget = std::nullopt);

/// Linear interpolation on the Delaunay triangulation of the observed cells;
/// cells outside the convex hull take the nearest observed value.
DenseVelocityGrid delaunay_interpolate(const SparseVelocityField& field);

/// Nearest observed value for every cell (exact Euclidean feature transform).
DenseVelocityGrid nearest_fill(const SparseVelocityField& field);

/// Normalised separable Gaussian, radius ceil(3 sigma), symmetric reflection
/// at the borders.
DenseVelocityGrid gaussian_smooth(const DenseVelocityGrid& grid, double sigma);
void gaussian_smooth_inplace(Raster<double>& values, double sigma);

/// Non-convex singular value shrinkage
///   s' = max(0, s - alpha / (2 lambda) * s^(p-1)),  s' = 0 for s = 0.
std::vector<double> shrink_singular_values(std::span<const double> s, double alpha, double lambda, double p);

struct McParams {
  double p = 0.8;
  double alpha0_factor = 0.9;
  double alpha_decay = 0.9;
  double lambda = 1.1;
  double tol = 1e-4;
  int max_inner = 200;
  double gauss_sigma = 5.0;

  void validate() const;
};

struct McResult {
  DenseVelocityGrid grid;
  int iterations = 0;
  int stages = 0;
  double alpha0 = 0.0;
  double final_loss = 0.0;
  double data_residual = 0.0;  // ||y - Mx||_2 of the returned grid
};

/// Iterated non-convex singular value thresholding with a Gaussian smoothing
/// step after every reconstruction. `initial` defaults to the Delaunay
/// interpolation of the median-filtered field.
McResult matrix_complete_detailed(const SparseVelocityField& field, const McParams& params,
                                  const DenseVelocityGrid* initial = nullptr);

inline DenseVelocityGrid matrix_complete(const SparseVelocityField& field, const McParams& params = {}) {
  return matrix_complete_detailed(field, params).grid;
}

/// ||y - Mx||_2 over observed cells.
double data_residual(const SparseVelocityField& field, const DenseVelocityGrid& grid);

/// Sum of singular values.
double nuclear_norm(const Raster<double>& values);

}  // namespace insardet
