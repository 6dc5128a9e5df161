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

// Procedural fixture pack: feature maps whose "object" channels fire inside a
// known rectangle, matching feature vectors, placeholder images, boxes and a
// manifest. Used for demos and end-to-end checks where no trained network is
// available.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cim/image_io.hpp"
#include "cim/tensor_io.hpp"
#include "cim/types.hpp"

namespace cim::synthetic {

struct PackSpec {
  std::size_t n_images = 50;
  std::size_t channels = 12;
  std::size_t grid = 7;         // feature map is grid x grid
  std::size_t image_size = 56;  // square images
  std::uint64_t seed = 2024;
};

struct Sample {
  std::string image_id;
  FeatureMap feature_map;
  FeatureVector feature_vector;
  BoundingBox box;
  RgbImage image;
};

// Maps a feature-grid row/column index to image pixels under corner-aligned
// resampling.
inline int grid_to_pixel(std::size_t g, std::size_t grid, std::size_t image_size) {
  return static_cast<int>(std::lround(static_cast<double>(g) * static_cast<double>(image_size - 1) /
                                      static_cast<double>(grid - 1)));
}

inline Sample make_sample(const PackSpec& spec, std::size_t index) {
  std::mt19937_64 rng(spec.seed * 1000003ULL + index);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.01);
  const std::size_t g = spec.grid;

  std::uniform_int_distribution<std::size_t> extent(2, std::max<std::size_t>(2, g / 2 + 1));
  const std::size_t rh = extent(rng), rw = extent(rng);
  std::uniform_int_distribution<std::size_t> top(0, g - rh), left(0, g - rw);
  const std::size_t u0 = top(rng), v0 = left(rng);
  const std::size_t u1 = u0 + rh, v1 = v0 + rw;  // exclusive

  const std::size_t k_object = std::max<std::size_t>(1, spec.channels / 2);
  std::vector<double> data(spec.channels * g * g);
  for (std::size_t k = 0; k < spec.channels; ++k) {
    const bool object = k < k_object;
    const double gain = 0.5 + unit(rng);
    for (std::size_t u = 0; u < g; ++u) {
      for (std::size_t v = 0; v < g; ++v) {
        const bool inside = u >= u0 && u < u1 && v >= v0 && v < v1;
        double value = object ? (inside ? gain * (0.6 + 0.4 * unit(rng)) : 0.05 * unit(rng)) : 0.3 * unit(rng);
        data[(k * g + u) * g + v] = value;
      }
    }
  }
  FeatureMap fm(spec.channels, g, g, std::move(data));

  std::vector<double> x(g * g, 0.0);
  for (std::size_t k = 0; k < k_object; ++k) {
    const double s = 0.5 + unit(rng);
    const auto ch = fm.channel(k);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += s * ch[i];
  }
  for (double& v : x) v += noise(rng);

  BoundingBox box;
  box.image_id = "img_" + std::to_string(index);
  box.image_width = box.image_height = static_cast<int>(spec.image_size);
  box.x_min = grid_to_pixel(v0, g, spec.image_size);
  box.y_min = grid_to_pixel(u0, g, spec.image_size);
  box.x_max = std::min(grid_to_pixel(v1 - 1, g, spec.image_size) + 1, box.image_width);
  box.y_max = std::min(grid_to_pixel(u1 - 1, g, spec.image_size) + 1, box.image_height);

  RgbImage image(spec.image_size, spec.image_size);
  for (std::size_t y = 0; y < spec.image_size; ++y) {
    for (std::size_t xpix = 0; xpix < spec.image_size; ++xpix) {
      std::uint8_t* p = image.pixel(xpix, y);
      const bool inside = box.contains(static_cast<int>(xpix), static_cast<int>(y));
      p[0] = inside ? 200 : 90;
      p[1] = inside ? 160 : 110;
      p[2] = inside ? 60 : 120;
    }
  }
  return Sample{box.image_id, std::move(fm), FeatureVector(std::move(x)), box, std::move(image)};
}

/// Writes <dir>/{features,images}/..., <dir>/bboxes.json and
/// <dir>/manifest.json (paths relative to dir). Returns the manifest path.
inline std::filesystem::path write_pack(const PackSpec& spec, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "features");
  fs::create_directories(dir / "images");
  nlohmann::json boxes = nlohmann::json::array();
  nlohmann::json records = nlohmann::json::array();
  for (std::size_t i = 0; i < spec.n_images; ++i) {
    const Sample s = make_sample(spec, i);
    const std::string fm_rel = "features/" + s.image_id + "_map.npy";
    const std::string fv_rel = "features/" + s.image_id + "_vec.npy";
    const std::string img_rel = "images/" + s.image_id + ".png";
    const std::array<std::size_t, 3> shape{s.feature_map.channels(), s.feature_map.height(), s.feature_map.width()};
    const std::array<std::size_t, 1> vshape{s.feature_vector.dim()};
    npy::write<float>(dir / fm_rel, shape, s.feature_map.data());
    npy::write<float>(dir / fv_rel, vshape, s.feature_vector.data());
    write_png(dir / img_rel, s.image);
    boxes.push_back(to_json(s.box));
    records.push_back({{"image_id", s.image_id}, {"feature_map", fm_rel}, {"feature_vector", fv_rel},
                       {"image", img_rel}});
  }
  {
    std::ofstream out(dir / "bboxes.json");
    out << boxes.dump(2) << "\n";
  }
  const fs::path manifest = dir / "manifest.json";
  std::ofstream out(manifest);
  out << nlohmann::json{{"bboxes", "bboxes.json"}, {"records", records}}.dump(2) << "\n";
  return manifest;
}

}  // namespace cim::synthetic
