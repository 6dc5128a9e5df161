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

#include <array>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "cim/error.hpp"
#include "cim/npy.hpp"
#include "cim/types.hpp"

namespace cim {

using Tensor = std::variant<FeatureMap, FeatureVector>;

/// Loads a rank-3 (feature map) or rank-1 (feature vector) tensor file.
/// float32 payloads are widened to double.
inline Tensor load_tensor(const std::filesystem::path& path) {
  npy::Array array = npy::read(path);
  if (array.rank() == 3) {
    const auto& s = array.shape;
    if (s[0] == 0 || s[1] == 0 || s[2] == 0) {
      throw Error(ErrorCode::MalformedFile, path.string() + ": zero-sized dimension");
    }
    try {
      return FeatureMap(s[0], s[1], s[2], std::move(array.data));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ": " + e.detail());
    }
  }
  if (array.rank() == 1) {
    if (array.shape[0] == 0) throw Error(ErrorCode::MalformedFile, path.string() + ": empty vector");
    try {
      return FeatureVector(std::move(array.data));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ": " + e.detail());
    }
  }
  throw Error(ErrorCode::UnsupportedRank,
              path.string() + ": rank " + std::to_string(array.rank()) + " (expected 1 or 3)");
}

inline FeatureMap load_feature_map(const std::filesystem::path& path) {
  Tensor t = load_tensor(path);
  if (auto* fm = std::get_if<FeatureMap>(&t)) return std::move(*fm);
  throw Error(ErrorCode::UnsupportedRank, path.string() + ": expected a rank-3 feature map");
}

inline FeatureVector load_feature_vector(const std::filesystem::path& path) {
  Tensor t = load_tensor(path);
  if (auto* fv = std::get_if<FeatureVector>(&t)) return std::move(*fv);
  throw Error(ErrorCode::UnsupportedRank, path.string() + ": expected a rank-1 feature vector");
}

inline void save_feature_map(const std::filesystem::path& path, const FeatureMap& fm) {
  const std::array<std::size_t, 3> shape{fm.channels(), fm.height(), fm.width()};
  npy::write<double>(path, shape, fm.data());
}

inline void save_vector(const std::filesystem::path& path, std::span<const double> values) {
  const std::array<std::size_t, 1> shape{values.size()};
  npy::write<double>(path, shape, values);
}

// ---------------------------------------------------------------------------
// Bounding boxes

namespace detail {

inline int json_int(const nlohmann::json& record, const char* key) {
  const auto& v = record.at(key);
  if (!v.is_number_integer()) {
    throw Error(ErrorCode::MalformedFile, std::string("bbox field '") + key + "' must be an integer");
  }
  const auto value = v.get<long long>();
  if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max()) {
    throw Error(ErrorCode::OutOfImageBounds, std::string("bbox field '") + key + "' out of range");
  }
  return static_cast<int>(value);
}

}  // namespace detail

/// Parses the bbox JSON array. Each record must carry exactly the keys
/// image_id, x_min, y_min, x_max, y_max, image_width, image_height.
inline std::vector<BoundingBox> parse_bboxes(const nlohmann::json& doc) {
  static const std::set<std::string> kKeys{"image_id", "x_min",       "y_min",       "x_max",
                                           "y_max",    "image_width", "image_height"};
  if (!doc.is_array()) throw Error(ErrorCode::MalformedFile, "bbox document must be a JSON array");
  std::vector<BoundingBox> boxes;
  boxes.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& record = doc[i];
    if (!record.is_object()) {
      throw Error(ErrorCode::MalformedFile, "bbox record " + std::to_string(i) + " is not an object");
    }
    std::set<std::string> keys;
    for (const auto& [key, _] : record.items()) keys.insert(key);
    if (keys != kKeys) {
      throw Error(ErrorCode::MalformedFile, "bbox record " + std::to_string(i) + " has the wrong key set");
    }
    if (!record.at("image_id").is_string()) {
      throw Error(ErrorCode::MalformedFile, "bbox record " + std::to_string(i) + ": image_id must be a string");
    }
    BoundingBox box;
    box.image_id = record.at("image_id").get<std::string>();
    box.x_min = detail::json_int(record, "x_min");
    box.y_min = detail::json_int(record, "y_min");
    box.x_max = detail::json_int(record, "x_max");
    box.y_max = detail::json_int(record, "y_max");
    box.image_width = detail::json_int(record, "image_width");
    box.image_height = detail::json_int(record, "image_height");
    box.validate();
    boxes.push_back(std::move(box));
  }
  return boxes;
}

inline std::vector<BoundingBox> load_bboxes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, path.string() + ": " + e.what());
  }
  try {
    return parse_bboxes(doc);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

inline nlohmann::json to_json(const BoundingBox& box) {
  return {{"image_id", box.image_id},       {"x_min", box.x_min},
          {"y_min", box.y_min},             {"x_max", box.x_max},
          {"y_max", box.y_max},             {"image_width", box.image_width},
          {"image_height", box.image_height}};
}

// ---------------------------------------------------------------------------
// Dictionary construction

/// Column k is channel k flattened row-major: row r maps to (u, v) = (r / W, r % W).
inline Dictionary flatten_to_dictionary(const FeatureMap& fm) {
  const auto rows = static_cast<Eigen::Index>(fm.spatial_size());
  const auto cols = static_cast<Eigen::Index>(fm.channels());
  Dictionary d(rows, cols);
  for (Eigen::Index k = 0; k < cols; ++k) {
    const auto channel = fm.channel(static_cast<std::size_t>(k));
    for (Eigen::Index r = 0; r < rows; ++r) d(r, k) = channel[static_cast<std::size_t>(r)];
  }
  return d;
}

/// Inverse of flatten_to_dictionary for a known spatial shape.
inline FeatureMap unflatten_dictionary(const Dictionary& d, std::size_t height, std::size_t width) {
  if (static_cast<std::size_t>(d.rows()) != height * width) {
    throw Error(ErrorCode::ShapeMismatch, "dictionary rows " + std::to_string(d.rows()) +
                                              " != H*W = " + std::to_string(height * width));
  }
  std::vector<double> data(static_cast<std::size_t>(d.size()));
  std::size_t i = 0;
  for (Eigen::Index k = 0; k < d.cols(); ++k) {
    for (Eigen::Index r = 0; r < d.rows(); ++r) data[i++] = d(r, k);
  }
  return FeatureMap(static_cast<std::size_t>(d.cols()), height, width, std::move(data));
}

}  // namespace cim
