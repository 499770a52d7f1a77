#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "insardet/grid.hpp"
#include "insardet/random.hpp"
#include "insardet/synth.hpp"
#include "insardet/wrapping.hpp"

namespace insardet {

struct PatchSpec {
  int patch_size = 224;
  int stride = 28;
  void validate() const;
};

struct PatchOrigin {
  int row = 0;
  int col = 0;
  bool operator==(const PatchOrigin&) const = default;
};

/// Top-left corners on the stride lattice; the last row/column is clamped so
/// the far edges are always covered. Images smaller than a patch give (0,0).
std::vector<PatchOrigin> patch_origins(int rows, int cols, const PatchSpec& spec);

struct Patch {
  int row = 0;
  int col = 0;
  Raster<std::uint8_t> pixels;
};

/// Symmetric (edge-including) reflection up to at least rows x cols.
Raster<std::uint8_t> reflect_pad(const Raster<std::uint8_t>& img, int rows, int cols);

std::vector<Patch> extract_patches(const Image8& image, const PatchSpec& spec);

/// Each block is a same-padded convolution, ReLU and 2x2 max-pool. A global
/// max pool and one dense logit follow the last block.
struct ConvBlock {
  int channels = 8;
  int kernel = 3;
  bool operator==(const ConvBlock&) const = default;
};

struct Architecture {
  int input_size = 224;
  std::vector<ConvBlock> blocks{{8, 3}, {16, 3}, {32, 3}};

  /// A few hundred parameters on 24x24 inputs, for gradient checks.
  static Architecture tiny();
  std::size_t parameter_count() const;
  void validate() const;
  bool operator==(const Architecture&) const = default;
};

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  int batch_size = 16;
  int epochs = 10;
  std::uint64_t seed = 1;
  bool flips = true;
  bool rotations = true;
  double weight_decay = 0.0;

  void validate() const;
};

struct TrainingMetadata {
  std::uint64_t seed = 0;
  int epochs = 0;
  std::size_t samples = 0;
  std::vector<double> loss_curve;  // mean training loss per epoch
};

class CnnModel {
 public:
  CnnModel() = default;
  /// He-initialised weights, zero biases.
  CnnModel(Architecture arch, std::uint64_t seed);

  const Architecture& architecture() const { return arch_; }
  std::vector<float>& parameters() { return params_; }
  const std::vector<float>& parameters() const { return params_; }
  TrainingMetadata& metadata() { return meta_; }
  const TrainingMetadata& metadata() const { return meta_; }

  /// Probability of deformation for one patch of input_size x input_size.
  double predict(const Raster<std::uint8_t>& patch) const;
  double logit(const Raster<std::uint8_t>& patch) const;

  /// `path` holds the JSON descriptor; weights go to `path` + ".bin".
  void save(const std::filesystem::path& path) const;
  static CnnModel load(const std::filesystem::path& path);

  bool operator==(const CnnModel& o) const { return arch_ == o.arch_ && params_ == o.params_; }

 private:
  Architecture arch_;
  std::vector<float> params_;
  TrainingMetadata meta_;
};

/// Supplies labelled training patches on demand, so augmentation can draw
/// fresh wrap intervals and crops every epoch.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::size_t size() const = 0;
  virtual int label(std::size_t i) const = 0;
  /// Grayscale patch of the model input size.
  virtual Raster<std::uint8_t> patch(std::size_t i, Rng& rng) const = 0;
};

/// Fixed in-memory patches.
class PatchSource : public SampleSource {
 public:
  void add(Raster<std::uint8_t> patch, int label);
  std::size_t size() const override { return patches_.size(); }
  int label(std::size_t i) const override { return labels_[i]; }
  Raster<std::uint8_t> patch(std::size_t i, Rng&) const override { return patches_[i]; }

 private:
  std::vector<Raster<std::uint8_t>> patches_;
  std::vector<int> labels_;
};

/// Velocity scenes (NaN where unobserved) wrapped with a random ensemble
/// member and cropped at a random position on every draw.
class WrappedSceneSource : public SampleSource {
 public:
  WrappedSceneSource(WrapConfig wrap, int patch_size) : wrap_(std::move(wrap)), patch_size_(patch_size) {
    wrap_.validate();
  }
  void add(Raster<double> values, int label);
  std::size_t size() const override { return scenes_.size(); }
  int label(std::size_t i) const override { return labels_[i]; }
  Raster<std::uint8_t> patch(std::size_t i, Rng& rng) const override;

 private:
  WrapConfig wrap_;
  int patch_size_;
  std::vector<Raster<double>> scenes_;
  std::vector<int> labels_;
};

/// Mini-batch SGD with momentum on binary cross-entropy. Deterministic for a
/// given seed. Throws std::runtime_error("diverged at batch N") on a
/// non-finite loss.
CnnModel train(const SampleSource& data, const TrainConfig& config, const Architecture& arch = {});

enum class InputKind { sparse, delaunay, completion };
InputKind input_kind_from_string(const std::string& s);
std::string to_string(InputKind k);

/// Loads the chosen rasters of a dataset as velocity scenes.
WrappedSceneSource load_scenes(const Dataset& ds, InputKind kind, const WrapConfig& wrap, int patch_size,
                               const std::vector<std::size_t>& indices);

/// Loss and gradient of one labelled patch, in double precision.
double loss_and_gradient(const CnnModel& model, const Raster<std::uint8_t>& patch, int label,
                         std::vector<double>& grad);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;  // stencils that crossed a ReLU or max-pool switch
};

/// Compares analytic and central-difference gradients on `n_params` randomly
/// chosen parameters (all of them if fewer). A parameter whose +-epsilon
/// stencil changes any ReLU state or max-pool winner sits on a kink where the
/// difference quotient is not a derivative; it is replaced by another draw.
GradCheckReport grad_check_detailed(const CnnModel& model, const Raster<std::uint8_t>& patch, int label,
                                    double epsilon, std::size_t n_params = 100, std::uint64_t seed = 0);

/// Max relative error of grad_check_detailed.
double grad_check(const CnnModel& model, const Raster<std::uint8_t>& patch, int label, double epsilon,
                  std::size_t n_params = 100, std::uint64_t seed = 0);

/// Binary cross-entropy of a logit, computed stably.
double bce_with_logit(double logit, int label);

}  // namespace insardet
