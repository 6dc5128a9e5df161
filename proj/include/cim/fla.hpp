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

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cim/error.hpp"
#include "cim/mapping.hpp"
#include "cim/types.hpp"

namespace cim {

inline constexpr double kDefaultThresholdFraction = 0.6;

/// Pixels of a normalized heatmap that exceed the threshold.
struct FocusRegion {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> mask;  // row-major, 1 = focused
  std::size_t pixel_count = 0;

  bool contains(std::size_t x, std::size_t y) const { return mask[y * width + x] != 0; }
};

struct FlaScore {
  std::string image_id;
  double fla1 = 0.0;  // |focus & bbox| / |bbox|
  double fla2 = 0.0;  // |focus & bbox| / |focus|, 0 when the focus region is empty
  std::size_t focus_pixels = 0;
  std::size_t bbox_pixels = 0;
  std::size_t intersection_pixels = 0;
  bool degenerate = false;
};

struct SkippedRecord {
  std::string image_id;
  std::string error;
};

struct FlaReport {
  std::vector<FlaScore> per_image;
  double mean_fla1 = 0.0;
  double mean_fla2 = 0.0;
  double threshold = kDefaultThresholdFraction;
  std::size_t n_images = 0;
  std::size_t n_degenerate = 0;
  std::vector<SkippedRecord> skipped;
};

/// Marks pixels strictly above threshold_fraction * 255.
inline FocusRegion threshold_focus(const NormalizedHeatmap& nhm, double threshold_fraction = kDefaultThresholdFraction) {
  if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidThreshold, "threshold fraction must lie strictly between 0 and 1");
  }
  const double cutoff = threshold_fraction * 255.0;
  FocusRegion focus{nhm.height, nhm.width, std::vector<std::uint8_t>(nhm.values.size(), 0), 0};
  for (std::size_t i = 0; i < nhm.values.size(); ++i) {
    if (nhm.values[i] > cutoff) {
      focus.mask[i] = 1;
      ++focus.pixel_count;
    }
  }
  return focus;
}

/// Scores a focus region against the union of one image's boxes.
inline FlaScore score(const FocusRegion& focus, std::span<const BoundingBox> boxes) {
  if (boxes.empty()) throw Error(ErrorCode::NoBoxes, "no bounding boxes supplied");
  const BoundingBox& first = boxes.front();
  for (const auto& box : boxes) {
    box.validate();
    if (box.image_id != first.image_id) {
      throw Error(ErrorCode::ShapeMismatch, "boxes for one score must share an image_id ('" + first.image_id +
                                                "' vs '" + box.image_id + "')");
    }
    if (static_cast<std::size_t>(box.image_width) != focus.width ||
        static_cast<std::size_t>(box.image_height) != focus.height) {
      throw Error(ErrorCode::ShapeMismatch,
                  "box '" + box.image_id + "' is declared on a " + std::to_string(box.image_width) + "x" +
                      std::to_string(box.image_height) + " image but the focus mask is " +
                      std::to_string(focus.width) + "x" + std::to_string(focus.height));
    }
  }

  std::vector<std::uint8_t> in_box(focus.mask.size(), 0);
  for (const auto& box : boxes) {
    for (int y = box.y_min; y < box.y_max; ++y) {
      auto* row = in_box.data() + static_cast<std::size_t>(y) * focus.width;
      std::fill(row + box.x_min, row + box.x_max, std::uint8_t{1});
    }
  }

  FlaScore s;
  s.image_id = first.image_id;
  s.focus_pixels = focus.pixel_count;
  for (std::size_t i = 0; i < in_box.size(); ++i) {
    if (in_box[i]) {
      ++s.bbox_pixels;
      if (focus.mask[i]) ++s.intersection_pixels;
    }
  }
  s.fla1 = static_cast<double>(s.intersection_pixels) / static_cast<double>(s.bbox_pixels);
  if (s.focus_pixels == 0) {
    s.degenerate = true;
    s.fla2 = 0.0;
  } else {
    s.fla2 = static_cast<double>(s.intersection_pixels) / static_cast<double>(s.focus_pixels);
  }
  return s;
}

/// Unweighted per-image means; degenerate images contribute fla2 = 0.
inline FlaReport aggregate(std::vector<FlaScore> scores, double threshold = kDefaultThresholdFraction) {
  if (scores.empty()) throw Error(ErrorCode::EmptyInput, "cannot aggregate an empty score list");
  FlaReport r;
  r.threshold = threshold;
  r.n_images = scores.size();
  double sum1 = 0.0, sum2 = 0.0;
  for (const auto& s : scores) {
    sum1 += s.fla1;
    sum2 += s.fla2;
    if (s.degenerate) ++r.n_degenerate;
  }
  r.mean_fla1 = sum1 / static_cast<double>(scores.size());
  r.mean_fla2 = sum2 / static_cast<double>(scores.size());
  r.per_image = std::move(scores);
  return r;
}

/// "43.9" style: value * 100 with one decimal.
inline std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
  return buf;
}

inline nlohmann::json to_json(const FlaScore& s) {
  return {{"image_id", s.image_id},
          {"fla1", s.fla1},
          {"fla2", s.fla2},
          {"focus_pixels", s.focus_pixels},
          {"bbox_pixels", s.bbox_pixels},
          {"intersection_pixels", s.intersection_pixels},
          {"degenerate", s.degenerate}};
}

inline nlohmann::json to_json(const FlaReport& r) {
  nlohmann::json per_image = nlohmann::json::array();
  for (const auto& s : r.per_image) per_image.push_back(to_json(s));
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& s : r.skipped) skipped.push_back({{"image_id", s.image_id}, {"error", s.error}});
  return {{"threshold", r.threshold},   {"n_images", r.n_images},   {"n_degenerate", r.n_degenerate},
          {"mean_fla1", r.mean_fla1},   {"mean_fla2", r.mean_fla2}, {"per_image", std::move(per_image)},
          {"skipped", std::move(skipped)}};
}

namespace detail {

inline std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace detail

/// One row per image, header row first.
inline std::string to_csv(const FlaReport& r) {
  std::ostringstream out;
  out << "image_id,fla1,fla2,focus_pixels,bbox_pixels,intersection_pixels,degenerate\n";
  char num[64];
  for (const auto& s : r.per_image) {
    out << detail::csv_field(s.image_id) << ',';
    std::snprintf(num, sizeof num, "%.17g", s.fla1);
    out << num << ',';
    std::snprintf(num, sizeof num, "%.17g", s.fla2);
    out << num << ',' << s.focus_pixels << ',' << s.bbox_pixels << ',' << s.intersection_pixels << ','
        << (s.degenerate ? "true" : "false") << '\n';
  }
  return out.str();
}

}  // namespace cim
