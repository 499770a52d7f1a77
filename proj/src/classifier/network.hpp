#pragma once

// Forward and backward passes of the patch CNN, templated on the scalar so
// training runs in float and gradient checks in double.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "insardet/classifier.hpp"

namespace insardet::detail {

struct LayerShape {
  int cin, cout, k, h, w;  // input shape of the convolution
  int ph, pw;              // pooled output
  std::size_t w_offset, b_offset;
};

inline std::vector<LayerShape> layer_shapes(const Architecture& arch, std::size_t* total = nullptr) {
  std::vector<LayerShape> out;
  int c = 1, h = arch.input_size, w = arch.input_size;
  std::size_t off = 0;
  for (const auto& b : arch.blocks) {
    LayerShape s{c, b.channels, b.kernel, h, w, h / 2, w / 2, off, 0};
    off += static_cast<std::size_t>(b.channels) * c * b.kernel * b.kernel;
    s.b_offset = off;
    off += b.channels;
    out.push_back(s);
    c = b.channels;
    h /= 2;
    w /= 2;
  }
  if (total) *total = off + c + 1;  // dense weights and bias
  return out;
}

template <class T>
class Network {
 public:
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  struct Workspace {
    std::vector<Mat> input;  // per layer, cin x (h*w)
    std::vector<Mat> col;    // cin*k*k x (h*w)
    std::vector<Mat> z;      // cout x (h*w), after ReLU
    std::vector<std::vector<int>> argmax;
    Mat pooled_last;
    Vec feature;                     // per-channel maximum of the last block
    std::vector<Eigen::Index> winner;  // where each maximum sits
    Mat dz, dcol, dinput;
  };

  explicit Network(const Architecture& arch) : shapes_(layer_shapes(arch, &n_params_)) {}

  std::size_t parameter_count() const { return n_params_; }

  void reserve(Workspace& ws) const {
    const auto L = shapes_.size();
    ws.input.resize(L);
    ws.col.resize(L);
    ws.z.resize(L);
    ws.argmax.resize(L);
  }

  T forward(const T* params, const Raster<std::uint8_t>& image, Workspace& ws) const {
    reserve(ws);
    const auto& s0 = shapes_.front();
    ws.input[0].resize(1, static_cast<Eigen::Index>(s0.h) * s0.w);
    for (std::size_t i = 0; i < image.size(); ++i) ws.input[0](0, i) = T(image[i]) / T(255) - T(0.5);  // centred

    for (std::size_t l = 0; l < shapes_.size(); ++l) {
      const auto& s = shapes_[l];
      im2col(ws.input[l], s, ws.col[l]);
      Eigen::Map<const Mat> W(params + s.w_offset, s.cout, static_cast<Eigen::Index>(s.cin) * s.k * s.k);
      Eigen::Map<const Vec> b(params + s.b_offset, s.cout);
      ws.z[l].noalias() = W * ws.col[l];
      ws.z[l].colwise() += b;
      ws.z[l] = ws.z[l].cwiseMax(T(0));
      Mat& next = l + 1 < shapes_.size() ? ws.input[l + 1] : ws.pooled_last;
      maxpool(ws.z[l], s, next, ws.argmax[l]);
    }
    const auto& sl = shapes_.back();
    // Global max, not mean: a deformation bowl fills a few percent of the
    // patch and averaging drowns it in the background.
    ws.feature.resize(sl.cout);
    ws.winner.resize(sl.cout);
    for (Eigen::Index c = 0; c < sl.cout; ++c) ws.feature(c) = ws.pooled_last.row(c).maxCoeff(&ws.winner[c]);
    const std::size_t d_off = sl.b_offset + sl.cout;
    Eigen::Map<const Vec> dw(params + d_off, sl.cout);
    return dw.dot(ws.feature) + params[d_off + sl.cout];
  }

  /// Fingerprint of every ReLU on/off state and max-pool winner of the last
  /// forward pass; equal fingerprints mean the same linear region.
  std::uint64_t activation_pattern(const Workspace& ws) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::uint64_t v) { h = (h ^ v) * 0x100000001b3ull; };
    for (std::size_t l = 0; l < shapes_.size(); ++l) {
      for (Eigen::Index i = 0; i < ws.z[l].size(); ++i) mix(ws.z[l].data()[i] > T(0));
      for (int a : ws.argmax[l]) mix(static_cast<std::uint64_t>(a));
    }
    for (auto a : ws.winner) mix(static_cast<std::uint64_t>(a));
    return h;
  }

  /// Adds d(loss)/d(params) to grad given d(loss)/d(logit).
  void backward(const T* params, T dlogit, Workspace& ws, T* grad) const {
    const auto& sl = shapes_.back();
    const std::size_t d_off = sl.b_offset + sl.cout;
    Eigen::Map<Vec>(grad + d_off, sl.cout) += dlogit * ws.feature;
    grad[d_off + sl.cout] += dlogit;

    Eigen::Map<const Vec> dw(params + d_off, sl.cout);
    Mat dpooled = Mat::Zero(sl.cout, pooled_size(sl));
    for (Eigen::Index c = 0; c < sl.cout; ++c) dpooled(c, ws.winner[c]) = dlogit * dw(c);

    for (std::size_t li = shapes_.size(); li-- > 0;) {
      const auto& s = shapes_[li];
      const Eigen::Index hw = static_cast<Eigen::Index>(s.h) * s.w;
      ws.dz.setZero(s.cout, hw);
      const auto& am = ws.argmax[li];
      for (Eigen::Index c = 0; c < s.cout; ++c)
        for (Eigen::Index j = 0; j < pooled_size(s); ++j) ws.dz(c, am[c * pooled_size(s) + j]) += dpooled(c, j);
      ws.dz = (ws.z[li].array() > T(0)).select(ws.dz, T(0));

      const Eigen::Index kk = static_cast<Eigen::Index>(s.cin) * s.k * s.k;
      Eigen::Map<Mat>(grad + s.w_offset, s.cout, kk).noalias() += ws.dz * ws.col[li].transpose();
      Eigen::Map<Vec>(grad + s.b_offset, s.cout) += ws.dz.rowwise().sum();
      if (li == 0) break;
      Eigen::Map<const Mat> W(params + s.w_offset, s.cout, kk);
      ws.dcol.noalias() = W.transpose() * ws.dz;
      col2im(ws.dcol, s, dpooled);
    }
  }

 private:
  static Eigen::Index pooled_size(const LayerShape& s) { return static_cast<Eigen::Index>(s.ph) * s.pw; }

  static void im2col(const Mat& in, const LayerShape& s, Mat& col) {
    const int pad = s.k / 2;
    col.resize(static_cast<Eigen::Index>(s.cin) * s.k * s.k, static_cast<Eigen::Index>(s.h) * s.w);
    for (int c = 0; c < s.cin; ++c) {
      const T* src = in.row(c).data();
      for (int ky = 0; ky < s.k; ++ky) {
        for (int kx = 0; kx < s.k; ++kx) {
          T* dst = col.row((c * s.k + ky) * s.k + kx).data();
          const int dx = kx - pad;
          const int x0 = std::max(0, -dx), x1 = std::min(s.w, s.w - dx);
          for (int y = 0; y < s.h; ++y) {
            T* out = dst + static_cast<std::ptrdiff_t>(y) * s.w;
            const int yy = y + ky - pad;
            if (yy < 0 || yy >= s.h) {
              std::fill(out, out + s.w, T(0));
              continue;
            }
            const T* row = src + static_cast<std::ptrdiff_t>(yy) * s.w;
            std::fill(out, out + x0, T(0));
            std::copy(row + x0 + dx, row + x1 + dx, out + x0);
            std::fill(out + x1, out + s.w, T(0));
          }
        }
      }
    }
  }

  static void col2im(const Mat& col, const LayerShape& s, Mat& out) {
    const int pad = s.k / 2;
    out.setZero(s.cin, static_cast<Eigen::Index>(s.h) * s.w);
    for (int c = 0; c < s.cin; ++c) {
      T* dst = out.row(c).data();
      for (int ky = 0; ky < s.k; ++ky) {
        for (int kx = 0; kx < s.k; ++kx) {
          const T* src = col.row((c * s.k + ky) * s.k + kx).data();
          const int dx = kx - pad;
          const int x0 = std::max(0, -dx), x1 = std::min(s.w, s.w - dx);
          for (int y = 0; y < s.h; ++y) {
            const int yy = y + ky - pad;
            if (yy < 0 || yy >= s.h) continue;
            const T* in = src + static_cast<std::ptrdiff_t>(y) * s.w;
            T* row = dst + static_cast<std::ptrdiff_t>(yy) * s.w;
            for (int x = x0; x < x1; ++x) row[x + dx] += in[x];
          }
        }
      }
    }
  }

  static void maxpool(const Mat& z, const LayerShape& s, Mat& out, std::vector<int>& argmax) {
    out.resize(s.cout, pooled_size(s));
    argmax.resize(static_cast<std::size_t>(s.cout) * pooled_size(s));
    for (int c = 0; c < s.cout; ++c) {
      const T* src = z.row(c).data();
      for (int py = 0; py < s.ph; ++py) {
        for (int px = 0; px < s.pw; ++px) {
          int best = (2 * py) * s.w + 2 * px;
          for (int idx : {best + 1, best + s.w, best + s.w + 1})
            if (src[idx] > src[best]) best = idx;
          const auto j = static_cast<std::size_t>(py) * s.pw + px;
          out(c, static_cast<Eigen::Index>(j)) = src[best];
          argmax[static_cast<std::size_t>(c) * pooled_size(s) + j] = best;
        }
      }
    }
  }

  std::vector<LayerShape> shapes_;
  std::size_t n_params_ = 0;
};

}  // namespace insardet::detail
