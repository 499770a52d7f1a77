#pragma once

#include <cstdint>
#include <vector>

#include "insardet/grid.hpp"

namespace insardet {

/// Binned semivariance of a scattered field.
struct VariogramCurve {
  std::vector<double> bin_centers;          // km
  std::vector<double> gamma;                // mm^2/yr^2, NaN where the bin is empty
  std::vector<std::uint64_t> pair_counts;

  std::size_t populated() const;
};

/// Exponential covariance C(d) = a exp(-b d) for d > 0 and C(0) = sill,
/// with a = sill - nugget. Distances in km.
struct CovarianceModel {
  double a = 0.0;       // mm^2/yr^2
  double b = 1.0;       // 1/km
  double sill = 0.0;    // mm^2/yr^2
  double nugget = 0.0;  // mm^2/yr^2

  static CovarianceModel from_sill_nugget(double sill, double nugget, double b);
  void validate() const;
};

struct VariogramOptions {
  double max_dist_km = 6.0;
  int n_bins = 30;
  std::uint64_t max_pairs = 2'000'000;
  std::uint64_t seed = 0;
};

VariogramCurve empirical_variogram(const SparseVelocityField& field, const VariogramOptions& opts);

/// Pair-count weighted least squares fit of gamma(d) = sill - a exp(-b d).
/// Throws std::runtime_error("fit failed") when no admissible model exists.
CovarianceModel fit_exponential_covariance(const VariogramCurve& curve);

double covariance_at(const CovarianceModel& model, double d_km);
/// Theoretical semivariance sill - C(d); zero at d = 0.
double semivariance_at(const CovarianceModel& model, double d_km);

}  // namespace insardet
