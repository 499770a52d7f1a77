#include "insardet/covariogram.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "insardet/random.hpp"

namespace insardet {

std::size_t VariogramCurve::populated() const {
  return static_cast<std::size_t>(
      std::count_if(pair_counts.begin(), pair_counts.end(), [](auto n) { return n > 0; }));
}

CovarianceModel CovarianceModel::from_sill_nugget(double sill, double nugget, double b) {
  CovarianceModel m{sill - nugget, b, sill, nugget};
  m.validate();
  return m;
}

void CovarianceModel::validate() const {
  const double tol = 1e-9 * std::max(1.0, std::abs(sill));
  if (!(a >= -tol) || !(b > 0.0) || !(nugget >= -tol) || !(nugget <= sill + tol) ||
      std::abs(a - (sill - nugget)) > tol)
    throw std::invalid_argument("invalid covariance model");
}

double covariance_at(const CovarianceModel& model, double d_km) {
  if (!(d_km >= 0.0)) throw std::invalid_argument("negative distance");
  if (d_km == 0.0) return model.sill;
  return model.a * std::exp(-model.b * d_km);
}

double semivariance_at(const CovarianceModel& model, double d_km) {
  return d_km == 0.0 ? 0.0 : model.sill - covariance_at(model, d_km);
}

VariogramCurve empirical_variogram(const SparseVelocityField& field, const VariogramOptions& opts) {
  if (!(opts.max_dist_km > 0.0)) throw std::invalid_argument("max_dist must be positive");
  if (opts.n_bins < 1) throw std::invalid_argument("n_bins must be positive");

  struct Sample { double x, y, v; };
  std::vector<Sample> s;
  s.reserve(field.count());
  const auto& spec = field.spec();
  for (int r = 0; r < spec.height; ++r)
    for (int c = 0; c < spec.width; ++c)
      if (field.observed(r, c))
        s.push_back({spec.cell_x(c) / 1000.0, spec.cell_y(r) / 1000.0, field.value(r, c)});
  const std::uint64_t n = s.size();
  if (n < 2) throw std::invalid_argument("variogram needs at least 2 samples");

  const double width = opts.max_dist_km / opts.n_bins;
  VariogramCurve curve;
  curve.bin_centers.resize(opts.n_bins);
  for (int k = 0; k < opts.n_bins; ++k) curve.bin_centers[k] = (k + 0.5) * width;
  std::vector<double> acc(opts.n_bins, 0.0);
  curve.pair_counts.assign(opts.n_bins, 0);

  auto add_pair = [&](std::uint64_t i, std::uint64_t j) {
    const double d = std::hypot(s[i].x - s[j].x, s[i].y - s[j].y);
    if (d >= opts.max_dist_km) return;
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(d / width), opts.n_bins - 1);
    const double dv = s[i].v - s[j].v;
    acc[k] += dv * dv;
    ++curve.pair_counts[k];
  };

  const std::uint64_t total = n * (n - 1) / 2;
  if (total <= opts.max_pairs) {
    for (std::uint64_t i = 0; i < n; ++i)
      for (std::uint64_t j = i + 1; j < n; ++j) add_pair(i, j);
  } else {
    // Uniform k-subset of unordered pairs: draw, dedupe, top up.
    Rng rng(mix_seed(opts.seed));
    std::uniform_int_distribution<std::uint64_t> pick(0, n - 1);
    std::vector<std::uint64_t> keys;
    keys.reserve(opts.max_pairs);
    while (keys.size() < opts.max_pairs) {
      while (keys.size() < opts.max_pairs) {
        const auto i = pick(rng), j = pick(rng);
        if (i == j) continue;
        keys.push_back(std::min(i, j) * n + std::max(i, j));
      }
      std::sort(keys.begin(), keys.end());
      keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    }
    for (auto key : keys) add_pair(key / n, key % n);
  }

  curve.gamma.resize(opts.n_bins);
  for (int k = 0; k < opts.n_bins; ++k)
    curve.gamma[k] = curve.pair_counts[k] > 0 ? 0.5 * acc[k] / curve.pair_counts[k] : kMissing;
  return curve;
}

namespace {

struct Bin {
  double d, g, w;
};

// Weighted least-squares cost of gamma = sill - a exp(-b d).
double cost(const std::vector<Bin>& bins, double sill, double a, double b) {
  double c = 0.0;
  for (const auto& p : bins) {
    const double r = p.g - (sill - a * std::exp(-b * p.d));
    c += p.w * r * r;
  }
  return c;
}

double weighted_mean_gamma(const std::vector<Bin>& bins) {
  double sw = 0.0, sg = 0.0;
  for (const auto& p : bins) {
    sw += p.w;
    sg += p.w * p.g;
  }
  return sg / sw;
}

// Damped Gauss-Newton on (sill, a, b). With fix_nugget_zero the model is
// constrained to a == sill and only (sill, b) move.
bool gauss_newton(const std::vector<Bin>& bins, double& sill, double& a, double& b, bool fix_nugget_zero) {
  double damping = 1e-6;
  double c = cost(bins, sill, a, b);
  for (int it = 0; it < 500; ++it) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    for (const auto& p : bins) {
      const double e = std::exp(-b * p.d);
      const double r = p.g - (sill - a * e);
      Eigen::Vector3d j(1.0, -e, a * p.d * e);  // d(model)/d(sill, a, b)
      if (fix_nugget_zero) j = Eigen::Vector3d(1.0 - e, 0.0, a * p.d * e);
      jtj += p.w * j * j.transpose();
      jtr += p.w * r * j;
    }
    if (fix_nugget_zero) jtj(1, 1) = 1.0;

    bool improved = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::Matrix3d lhs = jtj;
      for (int k = 0; k < 3; ++k) lhs(k, k) += damping * std::max(jtj(k, k), 1e-12);
      const Eigen::Vector3d step = lhs.ldlt().solve(jtr);
      if (!step.allFinite()) break;
      double ns = sill + step(0);
      double na = fix_nugget_zero ? ns : a + step(1);
      double nb = b + step(2);
      if (nb <= 0.0) nb = 0.5 * b;
      const double nc = cost(bins, ns, na, nb);
      if (std::isfinite(nc) && nc <= c) {
        const double rel = (c - nc) / std::max(c, 1e-300);
        sill = ns;
        a = na;
        b = nb;
        c = nc;
        damping = std::max(damping * 0.3, 1e-12);
        improved = true;
        if (rel < 1e-14) return true;
        break;
      }
      damping *= 10.0;
    }
    if (!improved) return std::isfinite(c);
  }
  return std::isfinite(c);
}

}  // namespace

CovarianceModel fit_exponential_covariance(const VariogramCurve& curve) {
  std::vector<Bin> bins;
  double wsum = 0.0;
  for (std::size_t k = 0; k < curve.bin_centers.size(); ++k) {
    if (curve.pair_counts[k] == 0 || !std::isfinite(curve.gamma[k])) continue;
    bins.push_back({curve.bin_centers[k], curve.gamma[k], static_cast<double>(curve.pair_counts[k])});
    wsum += static_cast<double>(curve.pair_counts[k]);
  }
  if (bins.size() < 4) throw std::runtime_error("fit failed: fewer than 4 populated bins");
  for (auto& p : bins) p.w /= wsum;

  // Initial guess: nugget from the first bin, sill from the last quartile,
  // b from a log-linear regression of (sill - gamma).
  const double nugget0 = bins.front().g;
  const std::size_t q = std::max<std::size_t>(1, bins.size() / 4);
  double sill0 = 0.0;
  for (std::size_t k = bins.size() - q; k < bins.size(); ++k) sill0 += bins[k].g;
  sill0 /= static_cast<double>(q);
  double a0 = sill0 - nugget0;
  const double dmax = bins.back().d;

  const double scale = std::max({std::abs(sill0), std::abs(nugget0), 1e-300});
  if (!(a0 > 1e-9 * scale)) {
    // Pure nugget: the curve is flat within resolution.
    const double s = weighted_mean_gamma(bins);
    if (!(s >= 0.0)) throw std::runtime_error("fit failed");
    return CovarianceModel{0.0, 3.0 / dmax, s, s};
  }

  double b0 = 0.0;
  {
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : bins) {
      const double gap = sill0 - p.g;
      if (gap <= 1e-6 * a0) continue;
      const double y = std::log(gap);
      sw += p.w;
      sx += p.w * p.d;
      sy += p.w * y;
      sxx += p.w * p.d * p.d;
      sxy += p.w * p.d * y;
    }
    const double den = sw * sxx - sx * sx;
    if (sw > 0 && den > 0) b0 = -(sw * sxy - sx * sy) / den;
    if (!(b0 > 0.0) || !std::isfinite(b0)) b0 = 3.0 / dmax;
  }

  double sill = sill0, a = a0, b = b0;
  if (!gauss_newton(bins, sill, a, b, false)) throw std::runtime_error("fit failed: no convergence");

  if (a < 0.0) {
    const double s = weighted_mean_gamma(bins);
    return CovarianceModel{0.0, b0, s, s};
  }
  if (a > sill) {
    // Negative nugget is inadmissible; refit on the boundary nugget = 0.
    sill = std::max(sill0, 1e-12);
    a = sill;
    b = b0;
    if (!gauss_newton(bins, sill, a, b, true)) throw std::runtime_error("fit failed: no convergence");
    a = sill;
  }
  if (!std::isfinite(sill) || !std::isfinite(a) || !std::isfinite(b) || b <= 0.0 || sill < 0.0)
    throw std::runtime_error("fit failed: negative parameters");
  return CovarianceModel{a, b, sill, sill - a};
}

}  // namespace insardet
