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

// Small hand-built fixtures shared by the pipeline and CLI tests.

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cim/image_io.hpp"
#include "cim/tensor_io.hpp"
#include "support.hpp"

namespace fixtures {

namespace fs = std::filesystem;

inline void save_map(const fs::path& p, std::size_t k, std::size_t h, std::size_t w, const std::vector<double>& v) {
  cim::save_feature_map(p, cim::FeatureMap(k, h, w, v));
}

/// K=4, H=W=2 feature map whose channels are one-hot pixel indicators, so the
/// dictionary is the 4x4 identity. Vector is (3, 0, 5, 1).
struct IdentityFixture {
  fs::path feature_map, feature_vector, wrong_vector;
  std::vector<double> x{3, 0, 5, 1};
};

inline IdentityFixture identity(const fs::path& dir) {
  IdentityFixture f;
  std::vector<double> data(16, 0.0);
  for (std::size_t k = 0; k < 4; ++k) data[k * 4 + k] = 1.0;
  f.feature_map = dir / "identity_map.npy";
  f.feature_vector = dir / "identity_vec.npy";
  f.wrong_vector = dir / "wrong_vec.npy";
  save_map(f.feature_map, 4, 2, 2, data);
  cim::save_vector(f.feature_vector, f.x);
  cim::save_vector(f.wrong_vector, std::vector<double>{1, 2, 3});
  return f;
}

inline cim::RgbImage flat_image(std::size_t w, std::size_t h) {
  cim::RgbImage img(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      auto* p = img.pixel(x, y);
      p[0] = static_cast<std::uint8_t>(40 + 5 * x);
      p[1] = static_cast<std::uint8_t>(90 + 3 * y);
      p[2] = 120;
    }
  return img;
}

/// Two channels on a 4x4 grid: channel 1 fires only in the top-left quadrant,
/// channel 0 only in the bottom-right one. The vector equals channel 1, so the
/// weights select channel 1. Image is 16x16.
struct QuadrantFixture {
  fs::path feature_map, feature_vector, zero_vector, image;
};

inline QuadrantFixture quadrant(const fs::path& dir) {
  QuadrantFixture f;
  std::vector<double> data(32, 0.0);
  std::vector<double> x(16, 0.0);
  for (std::size_t u = 0; u < 4; ++u)
    for (std::size_t v = 0; v < 4; ++v) {
      if (u >= 2 && v >= 2) data[0 * 16 + u * 4 + v] = 1.0 + 0.1 * static_cast<double>(u + v);
      if (u < 2 && v < 2) {
        data[1 * 16 + u * 4 + v] = 1.0 + 0.2 * static_cast<double>(u + v);
        x[u * 4 + v] = data[1 * 16 + u * 4 + v];
      }
    }
  f.feature_map = dir / "quad_map.npy";
  f.feature_vector = dir / "quad_vec.npy";
  f.zero_vector = dir / "quad_zero.npy";
  f.image = dir / "quad.png";
  save_map(f.feature_map, 2, 4, 4, data);
  cim::save_vector(f.feature_vector, x);
  cim::save_vector(f.zero_vector, std::vector<double>(16, 0.0));
  cim::write_png(f.image, flat_image(16, 16));
  return f;
}

/// Three 10x10 images whose single-channel feature map is a binary rectangle
/// at image resolution, so the focus region equals the rectangle exactly.
///   a: focus x<5 (50 px), box y<5 (50 px)      -> 25 shared: 0.5, 0.5
///   b: focus [2,6)^2 (16 px), box whole frame  -> 16 shared: 0.16, 1
///   c: focus [0,2)^2 (4 px), box [5,10)^2      -> 0 shared:  0, 0
struct MaskPack {
  fs::path manifest, bboxes;
  double mean_fla1 = (0.5 + 0.16 + 0.0) / 3.0;
  double mean_fla2 = (0.5 + 1.0 + 0.0) / 3.0;
};

inline MaskPack mask_pack(const fs::path& dir, bool with_missing_file = false) {
  struct Case {
    const char* id;
    int fx0, fy0, fx1, fy1;
    int bx0, by0, bx1, by1;
  };
  const std::array<Case, 3> cases{{{"a", 0, 0, 5, 10, 0, 0, 10, 5},
                                   {"b", 2, 2, 6, 6, 0, 0, 10, 10},
                                   {"c", 0, 0, 2, 2, 5, 5, 10, 10}}};
  MaskPack pack;
  nlohmann::json records = nlohmann::json::array();
  nlohmann::json boxes = nlohmann::json::array();
  for (const auto& c : cases) {
    std::vector<double> mask(100, 0.0);
    for (int y = c.fy0; y < c.fy1; ++y)
      for (int x = c.fx0; x < c.fx1; ++x) mask[static_cast<std::size_t>(y * 10 + x)] = 1.0;
    const std::string id = c.id;
    save_map(dir / (id + "_map.npy"), 1, 10, 10, mask);
    cim::save_vector(dir / (id + "_vec.npy"), mask);
    cim::write_png(dir / (id + ".png"), flat_image(10, 10));
    records.push_back({{"image_id", id},
                       {"feature_map", id + "_map.npy"},
                       {"feature_vector", (with_missing_file && id == "b") ? "missing.npy" : id + "_vec.npy"},
                       {"image", id + ".png"}});
    boxes.push_back(cim::to_json(cim::BoundingBox{id, c.bx0, c.by0, c.bx1, c.by1, 10, 10}));
  }
  pack.manifest = dir / "manifest.json";
  pack.bboxes = dir / "bboxes.json";
  testing_support::write_bytes(pack.manifest, nlohmann::json{{"records", records}}.dump(2));
  testing_support::write_bytes(pack.bboxes, boxes.dump(2));
  return pack;
}

}  // namespace fixtures
