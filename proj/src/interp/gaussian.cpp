#include <algorithm>
#include <cmath>
#include <vector>

#include "insardet/interp.hpp"

namespace insardet {

namespace {

// Symmetric (half-sample) reflection: ... b a | a b c ... c | c b ...
int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& w : k) w /= sum;
  return k;
}

}  // namespace

void gaussian_smooth_inplace(Raster<double>& values, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int H = values.rows(), W = values.cols();

  std::vector<double> line(std::max(H, W) + 2 * radius);
  for (int r = 0; r < H; ++r) {
    for (int i = -radius; i < W + radius; ++i) line[i + radius] = values(r, reflect(i, W));
    for (int c = 0; c < W; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kernel.size(); ++k) acc += kernel[k] * line[c + k];
      values(r, c) = acc;
    }
  }
  // Vertical pass as row-wise axpy so the inner loop runs along memory.
  Raster<double> tmp(H, W, 0.0);
  for (int r = 0; r < H; ++r) {
    double* dst = &tmp(r, 0);
    for (int k = -radius; k <= radius; ++k) {
      const double w = kernel[k + radius];
      const double* src = &values(reflect(r + k, H), 0);
      for (int c = 0; c < W; ++c) dst[c] += w * src[c];
    }
  }
  std::copy(tmp.begin(), tmp.end(), values.begin());
}

DenseVelocityGrid gaussian_smooth(const DenseVelocityGrid& grid, double sigma) {
  DenseVelocityGrid out = grid;
  gaussian_smooth_inplace(out.values(), sigma);
  return out;
}

}  // namespace insardet
