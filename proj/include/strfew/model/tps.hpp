// Copyright 2026 The strfew Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/LU>

#include "strfew/model/layers.hpp"

namespace strfew::nn {

struct TpsConfig {
  int fiducials = 20;
  int out_h = 32;
  int out_w = 100;
  std::vector<int> loc_channels = {64, 128, 256, 512};
  int loc_hidden = 256;
};

/// F points: F/2 evenly spaced along the top edge (y = -1), the same along
/// the bottom edge (y = 1).
inline Mat<double> canonical_fiducials(int f) {
  if (f < 6 || f % 2 != 0) throw std::invalid_argument("fiducial count must be even and at least 6");
  const int half = f / 2;
  Mat<double> c(f, 2);
  for (int i = 0; i < half; ++i) {
    const double x = -1.0 + 2.0 * i / (half - 1);
    c(i, 0) = x;
    c(i, 1) = -1.0;
    c(half + i, 0) = x;
    c(half + i, 1) = 1.0;
  }
  return c;
}

/// Fixed part of the warp: maps target fiducials C' (F x 2) to the sampling
/// grid (HW x 2) linearly, grid = A * C'.
class TpsGeometry {
 public:
  TpsGeometry() = default;
  TpsGeometry(int fiducials, int out_h, int out_w) : out_h_(out_h), out_w_(out_w) {
    const Mat<double> c = canonical_fiducials(fiducials);
    canonical_ = c;
    const int f = fiducials;
    Mat<double> delta = Mat<double>::Zero(f + 3, f + 3);
    for (int i = 0; i < f; ++i) {
      delta(i, 0) = 1.0;
      delta(i, 1) = c(i, 0);
      delta(i, 2) = c(i, 1);
      for (int j = 0; j < f; ++j) delta(i, 3 + j) = rbf((c.row(i) - c.row(j)).norm());
      delta(f, 3 + i) = c(i, 0);
      delta(f + 1, 3 + i) = c(i, 1);
      delta(f + 2, 3 + i) = 1.0;
    }
    const Mat<double> inv = delta.fullPivLu().inverse();
    const Eigen::Index n = static_cast<Eigen::Index>(out_h) * out_w;
    Mat<double> p_hat(n, f + 3);
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        const Eigen::Index r = static_cast<Eigen::Index>(y) * out_w + x;
        const double px = (2.0 * x + 1.0 - out_w) / out_w;
        const double py = (2.0 * y + 1.0 - out_h) / out_h;
        p_hat(r, 0) = 1.0;
        p_hat(r, 1) = px;
        p_hat(r, 2) = py;
        for (int j = 0; j < f; ++j) p_hat(r, 3 + j) = rbf(std::hypot(px - c(j, 0), py - c(j, 1)));
      }
    }
    a_ = p_hat * inv.leftCols(f);
  }

  int fiducials() const { return static_cast<int>(canonical_.rows()); }
  int out_h() const { return out_h_; }
  int out_w() const { return out_w_; }
  const Mat<double>& canonical() const { return canonical_; }
  const Mat<double>& a() const { return a_; }

 private:
  static double rbf(double r) { return r <= 0.0 ? 0.0 : r * r * std::log(r); }

  int out_h_ = 0, out_w_ = 0;
  Mat<double> canonical_;
  Mat<double> a_;
};

/// Bilinear sampling of image `b` of `src` at normalised grid coordinates
/// (HW x 2, x then y, pixel-centre convention, border clamp) into image
/// `b` of `dst`.
template <typename Scalar>
void grid_sample(const Tensor4<Scalar>& src, int b, const Mat<Scalar>& grid, Tensor4<Scalar>& dst) {
  const Eigen::Index n = grid.rows();
  for (int c = 0; c < src.c; ++c) {
    const Scalar* plane = src.data.data() + (static_cast<Eigen::Index>(b) * src.c + c) * src.plane();
    Scalar* out = dst.data.data() + (static_cast<Eigen::Index>(b) * dst.c + c) * dst.plane();
    for (Eigen::Index j = 0; j < n; ++j) {
      const Scalar px = std::clamp(((grid(j, 0) + 1) * src.w - 1) / 2, Scalar(0), Scalar(src.w - 1));
      const Scalar py = std::clamp(((grid(j, 1) + 1) * src.h - 1) / 2, Scalar(0), Scalar(src.h - 1));
      const int x0 = static_cast<int>(std::floor(px)), y0 = static_cast<int>(std::floor(py));
      const int x1 = std::min(x0 + 1, src.w - 1), y1 = std::min(y0 + 1, src.h - 1);
      const Scalar fx = px - x0, fy = py - y0;
      const Scalar top = plane[y0 * src.w + x0] * (1 - fx) + plane[y0 * src.w + x1] * fx;
      const Scalar bot = plane[y1 * src.w + x0] * (1 - fx) + plane[y1 * src.w + x1] * fx;
      out[j] = top * (1 - fy) + bot * fy;
    }
  }
}

/// Gradient of the sampled output of image `b` with respect to the grid.
template <typename Scalar>
Mat<Scalar> grid_sample_backward(const Tensor4<Scalar>& src, int b, const Mat<Scalar>& grid,
                                 const Tensor4<Scalar>& grad_out) {
  const Eigen::Index n = grid.rows();
  Mat<Scalar> dgrid = Mat<Scalar>::Zero(n, 2);
  for (int c = 0; c < src.c; ++c) {
    const Scalar* plane = src.data.data() + (static_cast<Eigen::Index>(b) * src.c + c) * src.plane();
    const Scalar* g = grad_out.data.data() + (static_cast<Eigen::Index>(b) * grad_out.c + c) * grad_out.plane();
    for (Eigen::Index j = 0; j < n; ++j) {
      const Scalar rx = ((grid(j, 0) + 1) * src.w - 1) / 2;
      const Scalar ry = ((grid(j, 1) + 1) * src.h - 1) / 2;
      const Scalar px = std::clamp(rx, Scalar(0), Scalar(src.w - 1));
      const Scalar py = std::clamp(ry, Scalar(0), Scalar(src.h - 1));
      const int x0 = static_cast<int>(std::floor(px)), y0 = static_cast<int>(std::floor(py));
      const int x1 = std::min(x0 + 1, src.w - 1), y1 = std::min(y0 + 1, src.h - 1);
      const Scalar fx = px - x0, fy = py - y0;
      const Scalar v00 = plane[y0 * src.w + x0], v01 = plane[y0 * src.w + x1];
      const Scalar v10 = plane[y1 * src.w + x0], v11 = plane[y1 * src.w + x1];
      if (rx > 0 && rx < src.w - 1) {
        dgrid(j, 0) += g[j] * ((1 - fy) * (v01 - v00) + fy * (v11 - v10)) * Scalar(src.w) / 2;
      }
      if (ry > 0 && ry < src.h - 1) {
        dgrid(j, 1) += g[j] * ((1 - fx) * (v10 - v00) + fx * (v11 - v01)) * Scalar(src.h) / 2;
      }
    }
  }
  return dgrid;
}

/// True when the points span less than a 2-D region or contain non-finite
/// values.
template <typename Scalar>
bool degenerate_fiducials(const Mat<Scalar>& pts) {
  if (!pts.allFinite()) return true;
  const Mat<double> p = pts.template cast<double>();
  const Mat<double> centred = p.rowwise() - p.colwise().mean();
  const Mat<double> cov = centred.transpose() * centred / static_cast<double>(p.rows());
  return cov.determinant() < 1e-8;
}

/// Warps each image by its fiducials (one F x 2 matrix per image).
template <typename Scalar>
Tensor4<Scalar> tps_warp(const Tensor4<Scalar>& images, const std::vector<Mat<Scalar>>& fiducials,
                         const TpsGeometry& geo) {
  const Mat<Scalar> a = geo.a().template cast<Scalar>();
  Tensor4<Scalar> out(images.n, images.c, geo.out_h(), geo.out_w());
  for (int b = 0; b < images.n; ++b) {
    const Mat<Scalar> grid = a * fiducials[static_cast<std::size_t>(b)];
    grid_sample(images, b, grid, out);
  }
  return out;
}

/// Spatial transformer: a small CNN regresses fiducials, which define a
/// thin-plate-spline warp sampled to the configured output size.
template <typename Scalar>
class Tps {
 public:
  Tps() = default;
  Tps(const TpsConfig& cfg, int in_channels, Rng& rng) : cfg_(cfg), geo_(cfg.fiducials, cfg.out_h, cfg.out_w) {
    int in = in_channels;
    for (std::size_t i = 0; i < cfg.loc_channels.size(); ++i) {
      const int out = cfg.loc_channels[i];
      auto& conv = loc_.add(Conv2d<Scalar>(ConvSpec{in, out, 3, 3, 1, 1, 1, 1, false}, rng));
      if (i == 0) conv.set_input_grad(false);
      loc_.add(BatchNorm2d<Scalar>(out));
      loc_.add(Relu<Scalar>());
      if (i + 1 < cfg.loc_channels.size()) loc_.add(MaxPool2d<Scalar>());
      in = out;
    }
    loc_.add(GlobalAvgPool<Scalar>());
    fc1_ = Dense<Scalar>(in, cfg.loc_hidden, rng);
    fc2_ = Dense<Scalar>(cfg.loc_hidden, 2 * cfg.fiducials, rng);
    fc2_.weight().value.setZero();
    const Mat<double>& c = geo_.canonical();
    for (int i = 0; i < cfg.fiducials; ++i) {
      fc2_.bias().value(0, 2 * i) = static_cast<Scalar>(c(i, 0));
      fc2_.bias().value(0, 2 * i + 1) = static_cast<Scalar>(c(i, 1));
    }
  }

  const TpsGeometry& geometry() const { return geo_; }
  std::int64_t degenerate_count() const { return degenerate_; }
  const std::vector<Mat<Scalar>>& last_fiducials() const { return fid_; }

  Tensor4<Scalar> forward(const Tensor4<Scalar>& x, Mode mode) {
    input_ = x;
    const Tensor4<Scalar> pooled = loc_.forward(x, mode);
    const Mat<Scalar> feat = Eigen::Map<const Mat<Scalar>>(pooled.data.data(), pooled.c, pooled.n).transpose();
    Mat<Scalar> hidden = fc1_.forward(feat);
    hidden_ = hidden.cwiseMax(Scalar(0));
    raw_ = fc2_.forward(hidden_);
    const int f = cfg_.fiducials;
    fid_.assign(static_cast<std::size_t>(x.n), Mat<Scalar>());
    fallback_.assign(static_cast<std::size_t>(x.n), false);
    for (int b = 0; b < x.n; ++b) {
      Mat<Scalar> pts(f, 2);
      for (int i = 0; i < f; ++i) {
        pts(i, 0) = std::clamp(raw_(b, 2 * i), Scalar(-1), Scalar(1));
        pts(i, 1) = std::clamp(raw_(b, 2 * i + 1), Scalar(-1), Scalar(1));
      }
      if (degenerate_fiducials(raw_.row(b).reshaped(2, f).transpose().eval())) {
        pts = geo_.canonical().template cast<Scalar>();
        fallback_[static_cast<std::size_t>(b)] = true;
        ++degenerate_;
      }
      fid_[static_cast<std::size_t>(b)] = pts;
    }
    return tps_warp(x, fid_, geo_);
  }

  /// Accumulates parameter gradients; the input image receives none.
  void backward(const Tensor4<Scalar>& grad) {
    const Mat<Scalar> a = geo_.a().template cast<Scalar>();
    const int f = cfg_.fiducials;
    Mat<Scalar> draw = Mat<Scalar>::Zero(raw_.rows(), raw_.cols());
    for (int b = 0; b < input_.n; ++b) {
      if (fallback_[static_cast<std::size_t>(b)]) continue;
      const Mat<Scalar> grid = a * fid_[static_cast<std::size_t>(b)];
      const Mat<Scalar> dgrid = grid_sample_backward(input_, b, grid, grad);
      const Mat<Scalar> dfid = a.transpose() * dgrid;
      for (int i = 0; i < f; ++i) {
        for (int k = 0; k < 2; ++k) {
          const Scalar r = raw_(b, 2 * i + k);
          if (r >= Scalar(-1) && r <= Scalar(1)) draw(b, 2 * i + k) = dfid(i, k);
        }
      }
    }
    Mat<Scalar> dhidden = fc2_.backward(draw);
    dhidden = (hidden_.array() > Scalar(0)).select(dhidden, Scalar(0));
    const Mat<Scalar> dfeat = fc1_.backward(dhidden);
    Tensor4<Scalar> dpooled(input_.n, static_cast<int>(dfeat.cols()), 1, 1);
    Eigen::Map<Mat<Scalar>>(dpooled.data.data(), dpooled.c, dpooled.n) = dfeat.transpose();
    loc_.backward(dpooled);
  }

  void visit(const std::string& prefix, const ParamVisitor<Scalar>& fn) {
    loc_.visit(prefix + "loc.", fn);
    fc1_.visit(prefix + "fc1.", fn);
    fc2_.visit(prefix + "fc2.", fn);
  }

 private:
  TpsConfig cfg_;
  TpsGeometry geo_;
  Sequential<Scalar> loc_;
  Dense<Scalar> fc1_, fc2_;
  Tensor4<Scalar> input_;
  Mat<Scalar> hidden_, raw_;
  std::vector<Mat<Scalar>> fid_;
  std::vector<bool> fallback_;
  std::int64_t degenerate_ = 0;
};

}  // namespace strfew::nn
