#include <stdexcept>

#include "insardet/classifier.hpp"

namespace insardet {

void PatchSpec::validate() const {
  if (patch_size < 1 || stride < 1) throw std::invalid_argument("patch size and stride must be positive");
  if (patch_size % stride != 0) throw std::invalid_argument("stride must divide the patch size");
}

namespace {

std::vector<int> axis_origins(int n, const PatchSpec& spec) {
  std::vector<int> out;
  if (n <= spec.patch_size) return {0};
  for (int p = 0; p + spec.patch_size <= n; p += spec.stride) out.push_back(p);
  if (out.back() + spec.patch_size < n) out.push_back(n - spec.patch_size);
  return out;
}

// Symmetric reflection of any integer index into [0, n).
int reflect_index(int i, int n) {
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

}  // namespace

std::vector<PatchOrigin> patch_origins(int rows, int cols, const PatchSpec& spec) {
  spec.validate();
  std::vector<PatchOrigin> out;
  for (int r : axis_origins(rows, spec))
    for (int c : axis_origins(cols, spec)) out.push_back({r, c});
  return out;
}

Raster<std::uint8_t> reflect_pad(const Raster<std::uint8_t>& img, int rows, int cols) {
  if (img.size() == 0) throw std::invalid_argument("cannot pad an empty image");
  rows = std::max(rows, img.rows());
  cols = std::max(cols, img.cols());
  Raster<std::uint8_t> out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out(r, c) = img(reflect_index(r, img.rows()), reflect_index(c, img.cols()));
  return out;
}

std::vector<Patch> extract_patches(const Image8& image, const PatchSpec& spec) {
  spec.validate();
  const auto& src = image.pixels;
  const bool small = src.rows() < spec.patch_size || src.cols() < spec.patch_size;
  const Raster<std::uint8_t> padded = small ? reflect_pad(src, spec.patch_size, spec.patch_size) : src;
  std::vector<Patch> out;
  for (const auto& o : patch_origins(padded.rows(), padded.cols(), spec)) {
    Patch p{o.row, o.col, Raster<std::uint8_t>(spec.patch_size, spec.patch_size)};
    for (int r = 0; r < spec.patch_size; ++r)
      for (int c = 0; c < spec.patch_size; ++c) p.pixels(r, c) = padded(o.row + r, o.col + c);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace insardet
