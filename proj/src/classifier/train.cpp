#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "insardet/classifier.hpp"
#include "insardet/io.hpp"
#include "network.hpp"

namespace insardet {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0,1)");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be non-negative");
}

double bce_with_logit(double z, int label) {
  // softplus(z) - y z
  const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return softplus - label * z;
}

void PatchSource::add(Raster<std::uint8_t> patch, int label) {
  patches_.push_back(std::move(patch));
  labels_.push_back(label);
}

void WrappedSceneSource::add(Raster<double> values, int label) {
  if (values.rows() < patch_size_ || values.cols() < patch_size_)
    throw std::invalid_argument("scene smaller than the patch size");
  scenes_.push_back(std::move(values));
  labels_.push_back(label);
}

Raster<std::uint8_t> WrappedSceneSource::patch(std::size_t i, Rng& rng) const {
  const auto& v = scenes_[i];
  const double mu =
      wrap_.intervals[std::uniform_int_distribution<std::size_t>(0, wrap_.intervals.size() - 1)(rng)];
  const double tau = std::uniform_real_distribution<double>(0.0, mu)(rng);
  const int r0 = std::uniform_int_distribution<int>(0, v.rows() - patch_size_)(rng);
  const int c0 = std::uniform_int_distribution<int>(0, v.cols() - patch_size_)(rng);
  Raster<double> crop(patch_size_, patch_size_);
  for (int r = 0; r < patch_size_; ++r)
    for (int c = 0; c < patch_size_; ++c) crop(r, c) = v(r0 + r, c0 + c);
  return wrap_gray(crop, mu, tau);
}

namespace {

Raster<std::uint8_t> augment(const Raster<std::uint8_t>& p, const TrainConfig& cfg, Rng& rng) {
  const bool hflip = cfg.flips && std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  const bool vflip = cfg.flips && std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  const int rot = cfg.rotations ? std::uniform_int_distribution<int>(0, 3)(rng) : 0;
  if (!hflip && !vflip && rot == 0) return p;
  const int n = p.rows();
  Raster<std::uint8_t> out(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      int rr = r, cc = c;
      for (int k = 0; k < rot; ++k) {  // 90 degrees clockwise
        const int t = rr;
        rr = n - 1 - cc;
        cc = t;
      }
      if (hflip) cc = n - 1 - cc;
      if (vflip) rr = n - 1 - rr;
      out(r, c) = p(rr, cc);
    }
  }
  return out;
}

}  // namespace

CnnModel train(const SampleSource& data, const TrainConfig& config, const Architecture& arch) {
  config.validate();
  arch.validate();
  const std::size_t n = data.size();
  if (n == 0) throw std::invalid_argument("empty training set");
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < n; ++i) (data.label(i) ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw std::invalid_argument("training set needs both classes");

  CnnModel model(arch, config.seed);
  auto& w = model.parameters();
  const detail::Network<float> net(arch);
  detail::Network<float>::Workspace ws;
  std::vector<float> grad(w.size()), velocity(w.size(), 0.0f);
  Rng rng(mix_seed(config.seed ^ 0x5eedull));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  const auto lr = static_cast<float>(config.learning_rate);
  const auto mom = static_cast<float>(config.momentum);
  const auto wd = static_cast<float>(config.weight_decay);
  std::size_t batch_index = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0f);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const auto patch = augment(data.patch(i, rng), config, rng);
        if (patch.rows() != arch.input_size || patch.cols() != arch.input_size)
          throw std::invalid_argument("training patch does not match the model input size");
        const int y = data.label(i);
        const double z = net.forward(w.data(), patch, ws);
        batch_loss += bce_with_logit(z, y);
        const double p = 1.0 / (1.0 + std::exp(-z));
        net.backward(w.data(), static_cast<float>(p - y), ws, grad.data());
      }
      if (!std::isfinite(batch_loss)) throw std::runtime_error("diverged at batch " + std::to_string(batch_index));
      epoch_loss += batch_loss;
      const float scale = 1.0f / static_cast<float>(end - start);
      for (std::size_t j = 0; j < w.size(); ++j) {
        velocity[j] = mom * velocity[j] - lr * (grad[j] * scale + wd * w[j]);
        w[j] += velocity[j];
      }
      for (float v : w)
        if (!std::isfinite(v)) throw std::runtime_error("diverged at batch " + std::to_string(batch_index));
    }
    model.metadata().loss_curve.push_back(epoch_loss / static_cast<double>(n));
  }
  model.metadata().epochs = config.epochs;
  model.metadata().samples = n;
  return model;
}

InputKind input_kind_from_string(const std::string& s) {
  if (s == "sparse") return InputKind::sparse;
  if (s == "delaunay" || s == "dt") return InputKind::delaunay;
  if (s == "completion" || s == "mc") return InputKind::completion;
  throw std::invalid_argument("unknown input kind: " + s);
}

std::string to_string(InputKind k) {
  switch (k) {
    case InputKind::sparse: return "sparse";
    case InputKind::delaunay: return "delaunay";
    case InputKind::completion: return "completion";
  }
  return "?";
}

WrappedSceneSource load_scenes(const Dataset& ds, InputKind kind, const WrapConfig& wrap, int patch_size,
                               const std::vector<std::size_t>& indices) {
  WrappedSceneSource src(wrap, patch_size);
  for (std::size_t i : indices) {
    const auto& e = ds.entries.at(i);
    const std::string& rel = kind == InputKind::sparse     ? e.sparse_path
                             : kind == InputKind::delaunay ? e.delaunay_path
                                                           : e.completion_path;
    if (rel.empty()) throw std::runtime_error("dataset has no " + to_string(kind) + " rasters");
    auto [spec, values] = io::read_raster(ds.root / rel);
    src.add(std::move(values), e.record.label == Label::positive ? 1 : 0);
  }
  return src;
}

double loss_and_gradient(const CnnModel& model, const Raster<std::uint8_t>& patch, int label,
                         std::vector<double>& grad) {
  const detail::Network<double> net(model.architecture());
  detail::Network<double>::Workspace ws;
  const std::vector<double> w(model.parameters().begin(), model.parameters().end());
  grad.assign(w.size(), 0.0);
  const double z = net.forward(w.data(), patch, ws);
  const double p = 1.0 / (1.0 + std::exp(-z));
  net.backward(w.data(), p - label, ws, grad.data());
  return bce_with_logit(z, label);
}

GradCheckReport grad_check_detailed(const CnnModel& model, const Raster<std::uint8_t>& patch, int label,
                                    double epsilon, std::size_t n_params, std::uint64_t seed) {
  std::vector<double> analytic;
  loss_and_gradient(model, patch, label, analytic);

  const detail::Network<double> net(model.architecture());
  detail::Network<double>::Workspace ws;
  std::vector<double> w(model.parameters().begin(), model.parameters().end());
  net.forward(w.data(), patch, ws);
  const auto base_pattern = net.activation_pattern(ws);

  std::vector<std::size_t> idx(w.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(mix_seed(seed));
  std::shuffle(idx.begin(), idx.end(), rng);

  GradCheckReport report;
  for (std::size_t i : idx) {
    if (report.checked == n_params) break;
    const double orig = w[i];
    w[i] = orig + epsilon;
    const double lp = bce_with_logit(net.forward(w.data(), patch, ws), label);
    const bool smooth_plus = net.activation_pattern(ws) == base_pattern;
    w[i] = orig - epsilon;
    const double lm = bce_with_logit(net.forward(w.data(), patch, ws), label);
    const bool smooth_minus = net.activation_pattern(ws) == base_pattern;
    w[i] = orig;
    if (!smooth_plus || !smooth_minus) {
      ++report.skipped_kinks;
      continue;
    }
    const double numeric = (lp - lm) / (2.0 * epsilon);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-8});
    report.max_rel_error = std::max(report.max_rel_error, std::abs(numeric - analytic[i]) / denom);
    ++report.checked;
  }
  return report;
}

double grad_check(const CnnModel& model, const Raster<std::uint8_t>& patch, int label, double epsilon,
                  std::size_t n_params, std::uint64_t seed) {
  return grad_check_detailed(model, patch, label, epsilon, n_params, seed).max_rel_error;
}

}  // namespace insardet
