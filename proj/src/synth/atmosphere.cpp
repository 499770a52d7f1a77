#include <cmath>
#include <stdexcept>

#include "insardet/synth.hpp"

namespace insardet {

AtmosphereSampler::AtmosphereSampler(const CovarianceModel& model, const GridSpec& spec, AtmosphereOptions opts)
    : model_(model), spec_(spec) {
  spec.validate();
  model.validate();
  direct_ = spec.size() <= opts.direct_cap;

  std::vector<std::pair<double, double>> nodes;  // (x, y) in km
  if (direct_) {
    nodes_x_ = spec.width;
    nodes_y_ = spec.height;
    for (int r = 0; r < spec.height; ++r)
      for (int c = 0; c < spec.width; ++c) nodes.emplace_back(spec.cell_x(c) / 1000.0, spec.cell_y(r) / 1000.0);
  } else {
    // Smallest node spacing whose lattice (covering the grid) fits the cap.
    for (step_ = 1;; ++step_) {
      nodes_x_ = (spec.width - 1 + step_ - 1) / step_ + 1;
      nodes_y_ = (spec.height - 1 + step_ - 1) / step_ + 1;
      if (static_cast<std::size_t>(nodes_x_) * nodes_y_ <= opts.coarse_cap) break;
    }
    for (int r = 0; r < nodes_y_; ++r)
      for (int c = 0; c < nodes_x_; ++c)
        nodes.emplace_back(spec.cell_x(c * step_) / 1000.0, spec.cell_y(r * step_) / 1000.0);
  }

  const auto n = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double d = std::hypot(nodes[i].first - nodes[j].first, nodes[i].second - nodes[j].second);
      // Off the direct path only the correlated part lives on the lattice.
      const double v = (i == j && !direct_) ? model.a : covariance_at(model, i == j ? 0.0 : d);
      cov(i, j) = cov(j, i) = v;
    }
    cov(i, i) += opts.jitter * model.sill;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw std::runtime_error("covariance matrix is not positive definite");
  factor_ = llt.matrixL();
}

DenseVelocityGrid AtmosphereSampler::sample(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto n = factor_.rows();
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
  const Eigen::VectorXd field = factor_.triangularView<Eigen::Lower>() * z;

  DenseVelocityGrid out(spec_);
  if (direct_) {
    for (Eigen::Index i = 0; i < n; ++i) out.values()[static_cast<std::size_t>(i)] = field(i);
    return out;
  }
  const double nugget_sd = std::sqrt(std::max(model_.sill - model_.a, 0.0));
  for (int r = 0; r < spec_.height; ++r) {
    const int r0 = std::min(r / step_, nodes_y_ - 2 < 0 ? 0 : nodes_y_ - 2);
    const double fr = nodes_y_ > 1 ? static_cast<double>(r - r0 * step_) / step_ : 0.0;
    const int r1 = std::min(r0 + 1, nodes_y_ - 1);
    for (int c = 0; c < spec_.width; ++c) {
      const int c0 = std::min(c / step_, nodes_x_ - 2 < 0 ? 0 : nodes_x_ - 2);
      const double fc = nodes_x_ > 1 ? static_cast<double>(c - c0 * step_) / step_ : 0.0;
      const int c1 = std::min(c0 + 1, nodes_x_ - 1);
      auto at = [&](int rr, int cc) { return field(static_cast<Eigen::Index>(rr) * nodes_x_ + cc); };
      const double top = (1 - fc) * at(r0, c0) + fc * at(r0, c1);
      const double bot = (1 - fc) * at(r1, c0) + fc * at(r1, c1);
      out(r, c) = (1 - fr) * top + fr * bot;
    }
  }
  if (nugget_sd > 0.0)
    for (auto& v : out.values()) v += nugget_sd * normal(rng);
  return out;
}

DenseVelocityGrid synth_atmosphere(const CovarianceModel& model, const GridSpec& spec, std::uint64_t seed,
                                   AtmosphereOptions opts) {
  AtmosphereSampler sampler(model, spec, opts);
  Rng rng(mix_seed(seed));
  return sampler.sample(rng);
}

}  // namespace insardet
