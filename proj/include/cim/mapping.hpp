/* Copyright 2026 The CIM Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
=============================================================================*/

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cim/error.hpp"
#include "cim/solver.hpp"
#include "cim/types.hpp"

namespace cim {

/// Raw class-irrelevant map at feature-map resolution, row-major.
struct Heatmap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  double at(std::size_t u, std::size_t v) const { return values[u * width + v]; }
};

/// Heatmap rescaled to [0, 255] at image resolution, row-major.
struct NormalizedHeatmap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }

  /// Values rounded to the nearest integer level.
  std::vector<std::uint8_t> to_gray() const {
    std::vector<std::uint8_t> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(), [](double v) {
      return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    });
    return out;
  }
};

enum class Colormap { Jet, Grayscale };

struct RenderSpec {
  Colormap colormap = Colormap::Jet;
  double overlay_opacity = 0.5;
  std::size_t output_width = 1;
  std::size_t output_height = 1;

  void validate() const {
    if (!(overlay_opacity >= 0.0 && overlay_opacity <= 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "overlay opacity must lie in [0, 1]");
    }
    if (output_width < 1 || output_height < 1) throw Error(ErrorCode::InvalidConfig, "output size must be >= 1x1");
  }
};

/// M(u, v) = sum_k w_k f_k(u, v).
inline Heatmap synthesize(const FeatureMap& fm, std::span<const double> weights) {
  if (weights.size() != fm.channels()) {
    throw Error(ErrorCode::ShapeMismatch, "weight vector has length " + std::to_string(weights.size()) +
                                              " but the feature map has " + std::to_string(fm.channels()) +
                                              " channels");
  }
  Heatmap hm{fm.height(), fm.width(), std::vector<double>(fm.spatial_size(), 0.0)};
  for (std::size_t k = 0; k < fm.channels(); ++k) {
    const double w = weights[k];
    const auto channel = fm.channel(k);
    for (std::size_t i = 0; i < hm.values.size(); ++i) hm.values[i] += w * channel[i];
  }
  return hm;
}

inline Heatmap synthesize(const FeatureMap& fm, const WeightVector& w) { return synthesize(fm, w.weights); }

namespace detail {

// Corner-aligned source coordinate: output ends map onto input ends. A single
// output sample maps to the input centre.
inline double source_coordinate(std::size_t out_index, std::size_t out_size, std::size_t in_size) {
  if (out_size == 1) return 0.5 * static_cast<double>(in_size - 1);
  return static_cast<double>(out_index) * static_cast<double>(in_size - 1) / static_cast<double>(out_size - 1);
}

}  // namespace detail

/// Bilinear resize with corner-aligned sampling. No clamping or rescaling.
inline std::vector<double> upsample_bilinear(std::span<const double> values, std::size_t height, std::size_t width,
                                             std::size_t target_width, std::size_t target_height) {
  if (values.size() != height * width) throw Error(ErrorCode::ShapeMismatch, "map buffer size mismatch");
  if (target_width < 1 || target_height < 1) throw Error(ErrorCode::InvalidConfig, "target size must be >= 1x1");
  std::vector<double> out(target_width * target_height);
  for (std::size_t y = 0; y < target_height; ++y) {
    const double sy = detail::source_coordinate(y, target_height, height);
    const auto y0 = std::min(static_cast<std::size_t>(sy), height - 1);
    const auto y1 = std::min(y0 + 1, height - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < target_width; ++x) {
      const double sx = detail::source_coordinate(x, target_width, width);
      const auto x0 = std::min(static_cast<std::size_t>(sx), width - 1);
      const auto x1 = std::min(x0 + 1, width - 1);
      const double fx = sx - static_cast<double>(x0);
      const double top = (1.0 - fx) * values[y0 * width + x0] + fx * values[y0 * width + x1];
      const double bottom = (1.0 - fx) * values[y1 * width + x0] + fx * values[y1 * width + x1];
      out[y * target_width + x] = (1.0 - fy) * top + fy * bottom;
    }
  }
  return out;
}

/// Clamp negatives to zero, resize bilinearly to the target, then min-max
/// rescale to [0, 255]. A constant map becomes all zeros.
inline NormalizedHeatmap normalize_and_upsample(const Heatmap& hm, std::size_t target_width,
                                                std::size_t target_height) {
  std::vector<double> clamped(hm.values.size());
  std::transform(hm.values.begin(), hm.values.end(), clamped.begin(), [](double v) { return std::max(v, 0.0); });

  NormalizedHeatmap out{target_height, target_width,
                        upsample_bilinear(clamped, hm.height, hm.width, target_width, target_height)};
  const auto [lo_it, hi_it] = std::minmax_element(out.values.begin(), out.values.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  if (!(range > 0.0)) {
    std::fill(out.values.begin(), out.values.end(), 0.0);
    return out;
  }
  for (double& v : out.values) v = std::clamp((v - lo) / range * 255.0, 0.0, 255.0);
  return out;
}

using Rgb = std::array<double, 3>;

/// Jet-like ramp over t in [0, 1], piecewise linear between the knots
///   0 blue, 0.25 cyan, 0.5 green, 0.75 yellow, 1 red.
/// Knot table version 1; changing it changes rendered bytes.
inline Rgb jet_color(double t) {
  static constexpr std::array<Rgb, 5> kKnots{{
      {0.0, 0.0, 255.0},
      {0.0, 255.0, 255.0},
      {0.0, 255.0, 0.0},
      {255.0, 255.0, 0.0},
      {255.0, 0.0, 0.0},
  }};
  t = std::clamp(t, 0.0, 1.0);
  const double pos = t * 4.0;
  const auto i = std::min(static_cast<std::size_t>(pos), std::size_t{3});
  const double f = pos - static_cast<double>(i);
  Rgb c;
  for (std::size_t ch = 0; ch < 3; ++ch) c[ch] = (1.0 - f) * kKnots[i][ch] + f * kKnots[i + 1][ch];
  return c;
}

inline Rgb colormap_color(Colormap map, double t) {
  if (map == Colormap::Grayscale) {
    const double g = std::clamp(t, 0.0, 1.0) * 255.0;
    return {g, g, g};
  }
  return jet_color(t);
}

/// out = (1 - opacity) * base + opacity * colormap(value / 255), rounded per channel.
inline RgbImage render(const NormalizedHeatmap& nhm, const RgbImage& base, const RenderSpec& spec) {
  spec.validate();
  if (nhm.width != base.width() || nhm.height != base.height() || spec.output_width != base.width() ||
      spec.output_height != base.height()) {
    throw Error(ErrorCode::ShapeMismatch,
                "heatmap " + std::to_string(nhm.width) + "x" + std::to_string(nhm.height) + ", image " +
                    std::to_string(base.width()) + "x" + std::to_string(base.height()) + " and output size " +
                    std::to_string(spec.output_width) + "x" + std::to_string(spec.output_height) + " must agree");
  }
  const double a = spec.overlay_opacity;
  RgbImage out(base.width(), base.height());
  for (std::size_t y = 0; y < base.height(); ++y) {
    for (std::size_t x = 0; x < base.width(); ++x) {
      const Rgb color = colormap_color(spec.colormap, nhm.at(y, x) / 255.0);
      const std::uint8_t* src = base.pixel(x, y);
      std::uint8_t* dst = out.pixel(x, y);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double blended = (1.0 - a) * static_cast<double>(src[ch]) + a * color[ch];
        dst[ch] = static_cast<std::uint8_t>(std::lround(std::clamp(blended, 0.0, 255.0)));
      }
    }
  }
  return out;
}

}  // namespace cim
