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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cim/error.hpp"

namespace cim {

/// (H*W) x K matrix whose column k is channel k of a FeatureMap.
using Dictionary = Eigen::MatrixXd;

namespace detail {

inline void require_finite(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::NonFiniteValue,
                  std::string(what) + " has a non-finite value at flat index " + std::to_string(i));
    }
  }
}

}  // namespace detail

/// K x H x W activation tensor from one CNN layer, channel-outermost C order:
/// value (k, u, v) lives at index (k * H + u) * W + v.
class FeatureMap {
 public:
  FeatureMap(std::size_t channels, std::size_t height, std::size_t width, std::vector<double> data)
      : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
    if (channels_ == 0 || height_ == 0 || width_ == 0) {
      throw Error(ErrorCode::ShapeMismatch, "feature map dimensions must be positive");
    }
    if (data_.size() != channels_ * height_ * width_) {
      throw Error(ErrorCode::ShapeMismatch,
                  "feature map data length " + std::to_string(data_.size()) + " != K*H*W = " +
                      std::to_string(channels_ * height_ * width_));
    }
    detail::require_finite(data_, "feature map");
  }

  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t spatial_size() const noexcept { return height_ * width_; }

  double at(std::size_t k, std::size_t u, std::size_t v) const {
    return data_[(k * height_ + u) * width_ + v];
  }

  std::span<const double> channel(std::size_t k) const {
    return std::span<const double>(data_).subspan(k * spatial_size(), spatial_size());
  }

  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t channels_;
  std::size_t height_;
  std::size_t width_;
  std::vector<double> data_;
};

/// Feature vector read out of the SDFC layer. Its length must equal H*W of the
/// feature map it is fitted against.
class FeatureVector {
 public:
  explicit FeatureVector(std::vector<double> data) : data_(std::move(data)) {
    if (data_.empty()) {
      throw Error(ErrorCode::ShapeMismatch, "feature vector must have positive length");
    }
    detail::require_finite(data_, "feature vector");
  }

  std::size_t dim() const noexcept { return data_.size(); }
  std::span<const double> data() const noexcept { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }

  Eigen::Map<const Eigen::VectorXd> as_eigen() const {
    return Eigen::Map<const Eigen::VectorXd>(data_.data(), static_cast<Eigen::Index>(data_.size()));
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  std::vector<double> data_;
};

/// Axis-aligned box, inclusive-exclusive: pixel (x, y) is inside iff
/// x_min <= x < x_max and y_min <= y < y_max.
struct BoundingBox {
  std::string image_id;
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;
  int image_width = 0;
  int image_height = 0;

  long long area() const noexcept {
    return static_cast<long long>(x_max - x_min) * static_cast<long long>(y_max - y_min);
  }

  bool contains(int x, int y) const noexcept {
    return x >= x_min && x < x_max && y >= y_min && y < y_max;
  }

  void validate() const {
    if (image_width <= 0 || image_height <= 0) {
      throw Error(ErrorCode::OutOfImageBounds,
                  "box '" + image_id + "' has non-positive image dimensions");
    }
    if (x_min >= x_max || y_min >= y_max) {
      throw Error(ErrorCode::EmptyBox, "box '" + image_id + "' is empty");
    }
    if (x_min < 0 || y_min < 0 || x_max > image_width || y_max > image_height) {
      throw Error(ErrorCode::OutOfImageBounds,
                  "box '" + image_id + "' exceeds its " + std::to_string(image_width) + "x" +
                      std::to_string(image_height) + " image");
    }
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// 8-bit interleaved RGB, row-major.
class RgbImage {
 public:
  RgbImage(std::size_t width, std::size_t height)
      : RgbImage(width, height, std::vector<std::uint8_t>(width * height * 3, 0)) {}

  RgbImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width_ == 0 || height_ == 0) {
      throw Error(ErrorCode::ShapeMismatch, "image dimensions must be positive");
    }
    if (pixels_.size() != width_ * height_ * 3) {
      throw Error(ErrorCode::ShapeMismatch, "image buffer does not match declared dimensions");
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }

  std::uint8_t* pixel(std::size_t x, std::size_t y) { return &pixels_[(y * width_ + x) * 3]; }
  const std::uint8_t* pixel(std::size_t x, std::size_t y) const {
    return &pixels_[(y * width_ + x) * 3];
  }

  std::span<const std::uint8_t> bytes() const noexcept { return pixels_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint8_t> pixels_;
};

}  // namespace cim
