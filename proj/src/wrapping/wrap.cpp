#include "insardet/wrapping.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace insardet {

void WrapConfig::validate() const {
  if (intervals.empty()) throw std::invalid_argument("no wrap intervals");
  for (double mu : intervals)
    if (!(mu > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("wrap intervals must be positive");
  if (offsets_per_interval < 1) throw std::invalid_argument("offsets_per_interval must be >= 1");
}

std::vector<double> WrapConfig::offsets(double mu) const {
  std::vector<double> out;
  for (int k = 0; k < offsets_per_interval; ++k) out.push_back(mu * k / offsets_per_interval);
  return out;
}

double wrap_value(double value, double mu, double offset) {
  if (!(mu > 0.0)) throw std::invalid_argument("wrap interval must be positive");
  double w = std::fmod(value + offset, mu);
  if (w < 0.0) w += mu;
  // fmod of a tiny negative can round up to exactly mu.
  return w >= mu ? 0.0 : w;
}

DenseVelocityGrid wrap(const DenseVelocityGrid& grid, double mu, double offset) {
  if (!(mu > 0.0)) throw std::invalid_argument("wrap interval must be positive");
  DenseVelocityGrid out(grid.spec());
  for (std::size_t i = 0; i < out.values().size(); ++i) out.values()[i] = wrap_value(grid.values()[i], mu, offset);
  return out;
}

Raster<std::uint8_t> wrap_gray(const Raster<double>& values, double mu, double offset) {
  if (!(mu > 0.0)) throw std::invalid_argument("wrap interval must be positive");
  Raster<std::uint8_t> out(values.rows(), values.cols(), 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) continue;
    const double level = std::floor(wrap_value(values[i], mu, offset) / mu * 256.0);
    out[i] = static_cast<std::uint8_t>(std::min(level, 255.0));
  }
  return out;
}

std::vector<WrappedImage> wrap_ensemble(const DenseVelocityGrid& grid, const WrapConfig& config) {
  config.validate();
  std::vector<WrappedImage> out;
  for (double mu : config.intervals)
    for (double tau : config.offsets(mu)) out.push_back({mu, tau, to_grayscale(wrap(grid, mu, tau), mu)});
  return out;
}

}  // namespace insardet
