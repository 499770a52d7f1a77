#include <algorithm>
#include <array>
#include <cmath>

#include "insardet/interp.hpp"

namespace insardet {

SparseVelocityField median_filter_nan(const SparseVelocityField& field) {
  const auto& spec = field.spec();
  Raster<double> out(spec.height, spec.width, kMissing);
  std::array<double, 9> win{};
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      if (!field.observed(r, c)) continue;
      int n = 0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (spec.contains(rr, cc) && field.observed(rr, cc)) win[n++] = field.value(rr, cc);
        }
      std::sort(win.begin(), win.begin() + n);
      out(r, c) = (n % 2) ? win[n / 2] : 0.5 * (win[n / 2 - 1] + win[n / 2]);
    }
  }
  return SparseVelocityField(spec, std::move(out));
}

std::vector<double> NoiseStats::impulses() const {
  std::vector<double> out;
  for (double v : amplitude_samples)
    if (std::abs(v) > impulse_threshold) out.push_back(v);
  return out;
}

NoiseStats extract_noise(const SparseVelocityField& field, const SparseVelocityField& filtered,
                         std::optional<double> nugget) {
  if (!(field.spec() == filtered.spec()) || !(field.mask() == filtered.mask()))
    throw std::invalid_argument("mask mismatch between field and filtered field");

  NoiseStats stats;
  const auto& spec = field.spec();
  stats.noise_map = Raster<double>(spec.height, spec.width, kMissing);
  for (std::size_t i = 0; i < stats.noise_map.size(); ++i) {
    if (!field.mask()[i]) continue;
    const double n = field.values()[i] - filtered.values()[i];
    stats.noise_map[i] = n;
    stats.amplitude_samples.push_back(n);
  }
  if (stats.amplitude_samples.empty()) return stats;

  double var = 0.0;
  if (nugget) {
    if (*nugget < 0.0) throw std::invalid_argument("negative nugget");
    var = *nugget;
  } else {
    auto tmp = stats.amplitude_samples;
    const auto mid = tmp.begin() + static_cast<std::ptrdiff_t>(tmp.size() / 2);
    std::nth_element(tmp.begin(), mid, tmp.end());
    const double med = *mid;
    for (auto& v : tmp) v = std::abs(v - med);
    std::nth_element(tmp.begin(), mid, tmp.end());
    const double sigma = 1.4826 * *mid;
    var = sigma * sigma;
  }
  stats.impulse_threshold = 3.0 * std::sqrt(var);
  std::size_t hits = 0;
  for (double v : stats.amplitude_samples)
    if (std::abs(v) > stats.impulse_threshold) ++hits;
  stats.impulse_rate = static_cast<double>(hits) / static_cast<double>(stats.amplitude_samples.size());
  return stats;
}

}  // namespace insardet
