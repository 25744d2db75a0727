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

#include "strfew/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace strfew {

AugmentPolicy AugmentPolicy::preset(const std::string& name) {
  if (name == "none") return none();
  if (name == "crnn-best") return crnn_best();
  if (name == "trba-best") return trba_best();
  throw std::invalid_argument("unknown augmentation preset: " + name);
}

void AugmentPolicy::validate() const {
  if (!(blur_max_radius >= 0.0)) throw std::invalid_argument("blur radius must be >= 0");
  if (!(crop_min_pct > 0.0 && crop_min_pct <= 100.0)) {
    throw std::invalid_argument("crop percentage must be in (0, 100]");
  }
  if (!(rot_max_deg >= 0.0 && rot_max_deg <= 180.0)) {
    throw std::invalid_argument("rotation degree must be in [0, 180]");
  }
}

namespace {

Raster gaussian_blur(const Raster& src, double sigma) {
  const int half = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + half)] = v;
    sum += v;
  }
  for (double& v : kernel) v /= sum;

  const int w = src.width, h = src.height, ch = src.channels;
  std::vector<double> tmp(src.pixels.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int k = -half; k <= half; ++k) {
          const int xx = std::clamp(x + k, 0, w - 1);
          acc += kernel[static_cast<std::size_t>(k + half)] * src.at(xx, y, c);
        }
        tmp[(static_cast<std::size_t>(y) * w + x) * ch + c] = acc;
      }
    }
  }
  Raster out(w, h, ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int k = -half; k <= half; ++k) {
          const int yy = std::clamp(y + k, 0, h - 1);
          acc += kernel[static_cast<std::size_t>(k + half)] *
                 tmp[(static_cast<std::size_t>(yy) * w + x) * ch + c];
        }
        out.at(x, y, c) = clamp_u8(acc);
      }
    }
  }
  return out;
}

Raster crop_window(const Raster& src, int x0, int y0, int cw, int ch) {
  Raster out(cw, ch, src.channels);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      for (int c = 0; c < src.channels; ++c) out.at(x, y, c) = src.at(x0 + x, y0 + y, c);
    }
  }
  return out;
}

Raster random_crop(const Raster& src, double min_pct, Rng& rng) {
  const double fw = rng.uniform(min_pct, 100.0) / 100.0;
  const double fh = rng.uniform(min_pct, 100.0) / 100.0;
  const int cw = std::clamp(static_cast<int>(std::lround(src.width * fw)), 1, src.width);
  const int ch = std::clamp(static_cast<int>(std::lround(src.height * fh)), 1, src.height);
  const int x0 = rng.uniform_int(0, src.width - cw);
  const int y0 = rng.uniform_int(0, src.height - ch);
  if (cw == src.width && ch == src.height) return src;
  return resize_bilinear(crop_window(src, x0, y0, cw, ch), src.width, src.height);
}

Raster rotate(const Raster& src, double degrees) {
  const double rad = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(rad), sn = std::sin(rad);
  const double cx = 0.5 * (src.width - 1), cy = 0.5 * (src.height - 1);
  Raster out(src.width, src.height, src.channels);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      // Inverse map; image y grows downwards so a counter-clockwise turn on
      // screen is a clockwise turn in array coordinates.
      const double dx = x - cx, dy = y - cy;
      const double sx = cs * dx - sn * dy + cx;
      const double sy = sn * dx + cs * dy + cy;
      for (int c = 0; c < src.channels; ++c) out.at(x, y, c) = clamp_u8(sample_bilinear(src, sx, sy, c));
    }
  }
  return out;
}

}  // namespace

Raster apply_augmentation(const Raster& image, AugmentKind kind, double strength, Rng& rng) {
  switch (kind) {
    case AugmentKind::kBlur:
      if (!(strength >= 0.0)) throw std::invalid_argument("blur strength must be >= 0");
      if (strength == 0.0) return image;
      return gaussian_blur(image, strength);
    case AugmentKind::kCrop:
      if (!(strength > 0.0 && strength <= 100.0)) {
        throw std::invalid_argument("crop strength must be in (0, 100]");
      }
      if (strength == 100.0) return image;
      return random_crop(image, strength, rng);
    case AugmentKind::kRot:
      if (!(std::abs(strength) <= 360.0)) throw std::invalid_argument("rotation must be within +-360 degrees");
      if (strength == 0.0) return image;
      return rotate(image, strength);
  }
  return image;
}

Raster sample_view(const Raster& image, const AugmentPolicy& policy, Rng& rng) {
  policy.validate();
  Raster out = image;
  if (policy.rot_max_deg > 0.0) {
    out = apply_augmentation(out, AugmentKind::kRot,
                             rng.uniform(-policy.rot_max_deg, policy.rot_max_deg), rng);
  }
  if (policy.crop_min_pct < 100.0) {
    out = apply_augmentation(out, AugmentKind::kCrop, rng.uniform(policy.crop_min_pct, 100.0), rng);
  }
  if (policy.blur_max_radius > 0.0) {
    out = apply_augmentation(out, AugmentKind::kBlur, rng.uniform(0.0, policy.blur_max_radius), rng);
  }
  return out;
}

Raster rotate_quarter_turns(const Raster& image, int k) {
  k = ((k % 4) + 4) % 4;
  if (k == 0) return image;
  const int w = image.width, h = image.height;
  Raster out = (k == 2) ? Raster(w, h, image.channels) : Raster(h, w, image.channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int ox = 0, oy = 0;
      switch (k) {
        case 1: ox = y; oy = w - 1 - x; break;          // 90 ccw
        case 2: ox = w - 1 - x; oy = h - 1 - y; break;  // 180
        case 3: ox = h - 1 - y; oy = x; break;          // 270 ccw
      }
      for (int c = 0; c < image.channels; ++c) out.at(ox, oy, c) = image.at(x, y, c);
    }
  }
  return out;
}

void ContrastivePolicy::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!(crop_scale_min > 0.0 && crop_scale_min <= crop_scale_max && crop_scale_max <= 1.0)) {
    throw std::invalid_argument("crop scale range must satisfy 0 < min <= max <= 1");
  }
  if (!(aspect_min > 0.0 && aspect_min <= aspect_max)) throw std::invalid_argument("bad aspect range");
  if (!prob(jitter_p) || !prob(grayscale_p) || !prob(hflip_p)) {
    throw std::invalid_argument("probabilities must lie in [0, 1]");
  }
  if (brightness < 0 || contrast < 0 || saturation < 0 || hue < 0 || hue > 0.5) {
    throw std::invalid_argument("bad color jitter strengths");
  }
  if (out_width < 1 || out_height < 1) throw std::invalid_argument("bad output size");
}

namespace {

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  v = mx;
  const double d = mx - mn;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d == 0.0) {
    h = 0.0;
  } else if (mx == r) {
    h = std::fmod((g - b) / d + 6.0, 6.0) / 6.0;
  } else if (mx == g) {
    h = ((b - r) / d + 2.0) / 6.0;
  } else {
    h = ((r - g) / d + 4.0) / 6.0;
  }
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  h = (h - std::floor(h)) * 6.0;
  const int i = static_cast<int>(h) % 6;
  const double f = h - std::floor(h);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

void color_jitter(Raster& img, const ContrastivePolicy& p, Rng& rng) {
  const double fb = rng.uniform(std::max(0.0, 1.0 - p.brightness), 1.0 + p.brightness);
  const double fc = rng.uniform(std::max(0.0, 1.0 - p.contrast), 1.0 + p.contrast);
  const double fs = rng.uniform(std::max(0.0, 1.0 - p.saturation), 1.0 + p.saturation);
  const double fh = rng.uniform(-p.hue, p.hue);
  for (auto& px : img.pixels) px = clamp_u8(px * fb);
  double mean = 0.0;
  const Raster gray = to_gray(img);
  for (auto v : gray.pixels) mean += v;
  mean /= static_cast<double>(gray.pixels.size());
  for (auto& px : img.pixels) px = clamp_u8(mean + (px - mean) * fc);
  if (img.channels != 3) return;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double r = img.at(x, y, 0) / 255.0, g = img.at(x, y, 1) / 255.0, b = img.at(x, y, 2) / 255.0;
      const double l = 0.299 * r + 0.587 * g + 0.114 * b;
      r = l + (r - l) * fs;
      g = l + (g - l) * fs;
      b = l + (b - l) * fs;
      r = std::clamp(r, 0.0, 1.0);
      g = std::clamp(g, 0.0, 1.0);
      b = std::clamp(b, 0.0, 1.0);
      double h, s, v;
      rgb_to_hsv(r, g, b, h, s, v);
      hsv_to_rgb(h + fh, s, v, r, g, b);
      img.at(x, y, 0) = clamp_u8(r * 255.0);
      img.at(x, y, 1) = clamp_u8(g * 255.0);
      img.at(x, y, 2) = clamp_u8(b * 255.0);
    }
  }
}

}  // namespace

Raster contrastive_view(const Raster& image, const ContrastivePolicy& policy, Rng& rng,
                        ContrastiveDraw* draw) {
  policy.validate();
  ContrastiveDraw d;
  d.crop_w = image.width;
  d.crop_h = image.height;
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double scale = rng.uniform(policy.crop_scale_min, policy.crop_scale_max);
    const double log_a = rng.uniform(std::log(policy.aspect_min), std::log(policy.aspect_max));
    const double a = std::exp(log_a);
    const int cw = static_cast<int>(std::lround(image.width * std::sqrt(scale * a)));
    const int ch = static_cast<int>(std::lround(image.height * std::sqrt(scale / a)));
    if (cw >= 1 && ch >= 1 && cw <= image.width && ch <= image.height) {
      d.crop_w = cw;
      d.crop_h = ch;
      d.crop_x = rng.uniform_int(0, image.width - cw);
      d.crop_y = rng.uniform_int(0, image.height - ch);
      break;
    }
  }
  Raster out = (d.crop_w == image.width && d.crop_h == image.height)
                   ? image
                   : crop_window(image, d.crop_x, d.crop_y, d.crop_w, d.crop_h);
  out = resize_bilinear(out, policy.out_width, policy.out_height);
  d.jittered = rng.bernoulli(policy.jitter_p);
  if (d.jittered) color_jitter(out, policy, rng);
  d.grayscale = rng.bernoulli(policy.grayscale_p);
  if (d.grayscale && out.channels == 3) {
    const Raster g = to_gray(out);
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        for (int c = 0; c < 3; ++c) out.at(x, y, c) = g.at(x, y);
      }
    }
  }
  d.flipped = rng.bernoulli(policy.hflip_p);
  if (d.flipped) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width / 2; ++x) {
        for (int c = 0; c < out.channels; ++c) std::swap(out.at(x, y, c), out.at(out.width - 1 - x, y, c));
      }
    }
  }
  if (draw) *draw = d;
  return out;
}

std::pair<Raster, Raster> contrastive_views(const Raster& image, const ContrastivePolicy& policy,
                                            Rng& rng, std::array<ContrastiveDraw, 2>* draws) {
  ContrastiveDraw d1, d2;
  Raster v1 = contrastive_view(image, policy, rng, &d1);
  Raster v2 = contrastive_view(image, policy, rng, &d2);
  if (draws) *draws = {d1, d2};
  return {std::move(v1), std::move(v2)};
}

}  // namespace strfew
