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

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "cim/image_io.hpp"
#include "cim/npy.hpp"
#include "cim/tensor_io.hpp"
#include "support.hpp"

namespace {

namespace fs = std::filesystem;
using testing_support::read_bytes;
using testing_support::temp_dir;
using testing_support::write_bytes;

template <class F>
cim::ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const cim::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected cim::Error";
  return cim::ErrorCode::IoError;
}

std::vector<double> iota(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i) * 0.5 - 1.0;
  return v;
}

fs::path write_npy(const fs::path& dir, const std::string& name, std::vector<std::size_t> shape,
                   const std::vector<double>& values, bool f32 = false) {
  const fs::path p = dir / name;
  if (f32) {
    cim::npy::write<float>(p, shape, values);
  } else {
    cim::npy::write<double>(p, shape, values);
  }
  return p;
}

// Hand-built header for dtype / layout variants the writer never emits.
std::string raw_npy(const std::string& dict, const std::string& payload) {
  std::string header = dict;
  const std::size_t total = 10 + header.size() + 1;
  header.append((64 - total % 64) % 64, ' ');
  header += '\n';
  std::string out("\x93NUMPY\x01\x00", 8);
  out += static_cast<char>(header.size() & 0xff);
  out += static_cast<char>(header.size() >> 8);
  return out + header + payload;
}

TEST(LoadTensor, Rank3IsFeatureMap) {
  const auto dir = temp_dir("tio_rank3");
  const auto values = iota(24);
  const auto t = cim::load_tensor(write_npy(dir, "fm.npy", {4, 2, 3}, values));
  const auto& fm = std::get<cim::FeatureMap>(t);
  EXPECT_EQ(fm.channels(), 4u);
  EXPECT_EQ(fm.height(), 2u);
  EXPECT_EQ(fm.width(), 3u);
  EXPECT_EQ(fm.at(2, 1, 0), values[(2 * 2 + 1) * 3 + 0]);
  EXPECT_EQ(std::vector<double>(fm.data().begin(), fm.data().end()), values);
}

TEST(LoadTensor, Rank1IsFeatureVector) {
  const auto dir = temp_dir("tio_rank1");
  const auto t = cim::load_tensor(write_npy(dir, "fv.npy", {6}, iota(6)));
  EXPECT_EQ(std::get<cim::FeatureVector>(t).dim(), 6u);
}

TEST(LoadTensor, Rank2IsRejected) {
  const auto dir = temp_dir("tio_rank2");
  const auto p = write_npy(dir, "m.npy", {4, 6}, iota(24));
  EXPECT_EQ(code_of([&] { cim::load_tensor(p); }), cim::ErrorCode::UnsupportedRank);
  const auto scalar = write_npy(dir, "s.npy", {}, {1.0});
  EXPECT_EQ(code_of([&] { cim::load_tensor(scalar); }), cim::ErrorCode::UnsupportedRank);
}

TEST(LoadTensor, Float32IsWidened) {
  const auto dir = temp_dir("tio_f32");
  const std::vector<double> values{0.1, 1.5, -2.25, 3.0e-3};
  const auto t = cim::load_tensor(write_npy(dir, "fv.npy", {4}, values, true));
  const auto& fv = std::get<cim::FeatureVector>(t);
  for (std::size_t i = 0; i < values.size(); ++i) {
    EXPECT_EQ(fv[i], static_cast<double>(static_cast<float>(values[i])));
  }
}

TEST(LoadTensor, BigEndianPayload) {
  const auto dir = temp_dir("tio_be");
  std::string payload;
  for (double v : {1.0, -2.5}) {
    unsigned char b[8];
    std::memcpy(b, &v, 8);
    for (int i = 7; i >= 0; --i) payload += static_cast<char>(b[i]);
  }
  write_bytes(dir / "be.npy", raw_npy("{'descr': '>f8', 'fortran_order': False, 'shape': (2,), }", payload));
  const auto fv = cim::load_feature_vector(dir / "be.npy");
  EXPECT_EQ(fv[0], 1.0);
  EXPECT_EQ(fv[1], -2.5);
}

TEST(LoadTensor, RejectsBadFiles) {
  const auto dir = temp_dir("tio_bad");
  write_bytes(dir / "magic.npy", "not an npy file at all");
  EXPECT_EQ(code_of([&] { cim::load_tensor(dir / "magic.npy"); }), cim::ErrorCode::MalformedFile);

  write_bytes(dir / "int.npy", raw_npy("{'descr': '<i4', 'fortran_order': False, 'shape': (2,), }", std::string(8, '\0')));
  EXPECT_EQ(code_of([&] { cim::load_tensor(dir / "int.npy"); }), cim::ErrorCode::UnsupportedDtype);

  write_bytes(dir / "f2.npy", raw_npy("{'descr': '<f2', 'fortran_order': False, 'shape': (2,), }", std::string(4, '\0')));
  EXPECT_EQ(code_of([&] { cim::load_tensor(dir / "f2.npy"); }), cim::ErrorCode::UnsupportedDtype);

  write_bytes(dir / "fortran.npy",
              raw_npy("{'descr': '<f8', 'fortran_order': True, 'shape': (1, 2, 1), }", std::string(16, '\0')));
  EXPECT_EQ(code_of([&] { cim::load_tensor(dir / "fortran.npy"); }), cim::ErrorCode::MalformedFile);

  auto v2 = raw_npy("{'descr': '<f8', 'fortran_order': False, 'shape': (1,), }", std::string(8, '\0'));
  v2[6] = 2;
  write_bytes(dir / "v2.npy", v2);
  EXPECT_EQ(code_of([&] { cim::load_tensor(dir / "v2.npy"); }), cim::ErrorCode::MalformedFile);

  EXPECT_EQ(code_of([&] { cim::load_tensor(dir / "missing.npy"); }), cim::ErrorCode::IoError);
}

TEST(LoadTensor, RejectsNonFiniteValues) {
  const auto dir = temp_dir("tio_nan");
  auto values = iota(12);
  values[7] = std::numeric_limits<double>::quiet_NaN();
  const auto p = write_npy(dir, "nan.npy", {3, 2, 2}, values);
  EXPECT_EQ(code_of([&] { cim::load_tensor(p); }), cim::ErrorCode::NonFiniteValue);
  values[7] = std::numeric_limits<double>::infinity();
  const auto q = write_npy(dir, "inf.npy", {12}, values, true);
  EXPECT_EQ(code_of([&] { cim::load_tensor(q); }), cim::ErrorCode::NonFiniteValue);
}

// Any file whose declared element count disagrees with its payload is rejected.
TEST(LoadTensor, PayloadSizeMustMatchHeaderProperty) {
  const auto dir = temp_dir("tio_payload");
  std::mt19937 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<std::size_t> dim(1, 5);
    const std::vector<std::size_t> shape = trial % 2 ? std::vector<std::size_t>{dim(rng), dim(rng), dim(rng)}
                                                     : std::vector<std::size_t>{dim(rng)};
    std::size_t count = 1;
    for (auto s : shape) count *= s;
    const bool f32 = trial % 3 == 0;
    auto bytes = cim::npy::encode<double>(shape, iota(count));
    if (f32) bytes = cim::npy::encode<float>(shape, iota(count));
    ASSERT_NO_THROW(cim::npy::parse(bytes));

    std::uniform_int_distribution<int> delta(1, 12);
    auto longer = bytes;
    longer.insert(longer.end(), static_cast<std::size_t>(delta(rng)), 0);
    EXPECT_EQ(code_of([&] { cim::npy::parse(longer); }), cim::ErrorCode::MalformedFile);

    auto shorter = bytes;
    shorter.resize(shorter.size() - std::min<std::size_t>(static_cast<std::size_t>(delta(rng)), count * (f32 ? 4 : 8)));
    EXPECT_EQ(code_of([&] { cim::npy::parse(shorter); }), cim::ErrorCode::MalformedFile);
  }
}

TEST(LoadTensor, HeaderIsAlignedAndReadableByNumpyConvention) {
  const std::array<std::size_t, 3> shape{2, 3, 4};
  const auto bytes = cim::npy::encode<double>(shape, iota(24));
  const std::size_t header_len = bytes[8] | (bytes[9] << 8);
  EXPECT_EQ((10 + header_len) % 64, 0u);
  EXPECT_EQ(bytes[10 + header_len - 1], '\n');
  const std::string header(bytes.begin() + 10, bytes.begin() + 10 + static_cast<long>(header_len));
  EXPECT_NE(header.find("'shape': (2, 3, 4)"), std::string::npos);
  const std::array<std::size_t, 1> vshape{5};
  const auto vbytes = cim::npy::encode<float>(vshape, iota(5));
  const std::string vheader(vbytes.begin() + 10, vbytes.begin() + 74);
  EXPECT_NE(vheader.find("'shape': (5,)"), std::string::npos);
  EXPECT_NE(vheader.find("'descr': '<f4'"), std::string::npos);
}

// ---------------------------------------------------------------------------

nlohmann::json box_record(int x0, int y0, int x1, int y1, int w = 84, int h = 84) {
  return {{"image_id", "a"}, {"x_min", x0}, {"y_min", y0}, {"x_max", x1},
          {"y_max", y1},     {"image_width", w}, {"image_height", h}};
}

TEST(LoadBboxes, ParsesValidRecords) {
  const auto boxes = cim::parse_bboxes(nlohmann::json::array({box_record(0, 0, 84, 84), box_record(1, 2, 3, 4)}));
  ASSERT_EQ(boxes.size(), 2u);
  EXPECT_EQ(boxes[0].area(), 84 * 84);
  EXPECT_EQ(boxes[1].area(), 4);
  EXPECT_TRUE(boxes[1].contains(1, 2));
  EXPECT_FALSE(boxes[1].contains(3, 2));
  EXPECT_FALSE(boxes[1].contains(1, 4));
}

TEST(LoadBboxes, ErrorCases) {
  auto parse = [](nlohmann::json rec) { return [rec] { cim::parse_bboxes(nlohmann::json::array({rec})); }; };
  EXPECT_EQ(code_of(parse(box_record(10, 10, 10, 20))), cim::ErrorCode::EmptyBox);
  EXPECT_EQ(code_of(parse(box_record(10, 20, 15, 5))), cim::ErrorCode::EmptyBox);
  EXPECT_EQ(code_of(parse(box_record(0, 0, 100, 50))), cim::ErrorCode::OutOfImageBounds);
  EXPECT_EQ(code_of(parse(box_record(-1, 0, 10, 10))), cim::ErrorCode::OutOfImageBounds);

  auto extra = box_record(0, 0, 5, 5);
  extra["score"] = 0.5;
  EXPECT_EQ(code_of(parse(extra)), cim::ErrorCode::MalformedFile);
  auto missing = box_record(0, 0, 5, 5);
  missing.erase("image_height");
  EXPECT_EQ(code_of(parse(missing)), cim::ErrorCode::MalformedFile);
  auto fractional = box_record(0, 0, 5, 5);
  fractional["x_max"] = 4.5;
  EXPECT_EQ(code_of(parse(fractional)), cim::ErrorCode::MalformedFile);
  EXPECT_EQ(code_of([] { cim::parse_bboxes(nlohmann::json::object()); }), cim::ErrorCode::MalformedFile);
}

TEST(LoadBboxes, FromFileAndAreaInvariant) {
  const auto dir = temp_dir("tio_bbox");
  std::mt19937 rng(4);
  nlohmann::json doc = nlohmann::json::array();
  for (int i = 0; i < 100; ++i) {
    std::uniform_int_distribution<int> size(1, 100);
    const int w = size(rng), h = size(rng);
    std::uniform_int_distribution<int> xs(0, w - 1), ys(0, h - 1);
    const int x0 = xs(rng), y0 = ys(rng);
    std::uniform_int_distribution<int> xe(x0 + 1, w), ye(y0 + 1, h);
    auto rec = box_record(x0, y0, xe(rng), ye(rng), w, h);
    rec["image_id"] = "img" + std::to_string(i % 10);  // duplicates allowed
    doc.push_back(rec);
  }
  write_bytes(dir / "boxes.json", doc.dump());
  const auto boxes = cim::load_bboxes(dir / "boxes.json");
  ASSERT_EQ(boxes.size(), 100u);
  for (const auto& b : boxes) EXPECT_GE(b.area(), 1);

  write_bytes(dir / "broken.json", "[{");
  EXPECT_EQ(code_of([&] { cim::load_bboxes(dir / "broken.json"); }), cim::ErrorCode::MalformedFile);
}

// ---------------------------------------------------------------------------

TEST(FlattenToDictionary, SingleChannelReshape) {
  const cim::FeatureMap fm(1, 2, 2, {1, 2, 3, 4});
  const auto d = cim::flatten_to_dictionary(fm);
  ASSERT_EQ(d.rows(), 4);
  ASSERT_EQ(d.cols(), 1);
  EXPECT_EQ(d(0, 0), 1);
  EXPECT_EQ(d(1, 0), 2);
  EXPECT_EQ(d(2, 0), 3);
  EXPECT_EQ(d(3, 0), 4);
}

TEST(FlattenToDictionary, ColumnStackingAndIndexMapping) {
  const cim::FeatureMap fm(2, 2, 2, {1, 2, 3, 4, 5, 6, 7, 8});
  const auto d = cim::flatten_to_dictionary(fm);
  ASSERT_EQ(d.rows(), 4);
  ASSERT_EQ(d.cols(), 2);
  EXPECT_EQ(d.col(1), (Eigen::Vector4d(5, 6, 7, 8)));

  const cim::FeatureMap wide(3, 2, 5, iota(30));
  const auto dw = cim::flatten_to_dictionary(wide);
  for (Eigen::Index k = 0; k < 3; ++k)
    for (Eigen::Index r = 0; r < 10; ++r)
      EXPECT_EQ(dw(r, k), wide.at(static_cast<std::size_t>(k), static_cast<std::size_t>(r / 5),
                                  static_cast<std::size_t>(r % 5)));
}

TEST(FlattenToDictionary, RoundTripIsBitExactProperty) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> dim(1, 9);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = dim(rng), h = dim(rng), w = dim(rng);
    std::vector<double> data(k * h * w);
    for (double& v : data) v = normal(rng);
    const cim::FeatureMap fm(k, h, w, data);
    EXPECT_EQ(cim::unflatten_dictionary(cim::flatten_to_dictionary(fm), h, w), fm);
  }
  EXPECT_THROW(cim::unflatten_dictionary(cim::Dictionary(5, 2), 2, 2), cim::Error);
}

TEST(Types, FeatureMapValidation) {
  EXPECT_EQ(code_of([] { cim::FeatureMap(0, 1, 1, {}); }), cim::ErrorCode::ShapeMismatch);
  EXPECT_EQ(code_of([] { cim::FeatureMap(1, 2, 2, {1, 2, 3}); }), cim::ErrorCode::ShapeMismatch);
  EXPECT_EQ(code_of([] { cim::FeatureMap(1, 1, 1, {std::nan("")}); }), cim::ErrorCode::NonFiniteValue);
  EXPECT_EQ(code_of([] { cim::FeatureVector({}); }), cim::ErrorCode::ShapeMismatch);
}

// ---------------------------------------------------------------------------

TEST(Png, RoundTripAndDeterministicBytes) {
  const auto dir = temp_dir("tio_png");
  cim::RgbImage img(5, 3);
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t x = 0; x < 5; ++x) {
      auto* p = img.pixel(x, y);
      p[0] = static_cast<std::uint8_t>(x * 50);
      p[1] = static_cast<std::uint8_t>(y * 80);
      p[2] = static_cast<std::uint8_t>(x + y);
    }
  cim::write_png(dir / "a.png", img);
  cim::write_png(dir / "b.png", img);
  EXPECT_EQ(cim::read_png(dir / "a.png"), img);
  EXPECT_EQ(read_bytes(dir / "a.png"), read_bytes(dir / "b.png"));
}

TEST(Png, GrayscaleIsPromotedToRgb) {
  const auto dir = temp_dir("tio_gray");
  const std::vector<std::uint8_t> gray{0, 64, 128, 255};
  cim::write_gray_png(dir / "g.png", 2, 2, gray);
  const auto img = cim::read_png(dir / "g.png");
  ASSERT_EQ(img.width(), 2u);
  ASSERT_EQ(img.height(), 2u);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto* p = img.pixel(i % 2, i / 2);
    EXPECT_EQ(p[0], gray[i]);
    EXPECT_EQ(p[1], gray[i]);
    EXPECT_EQ(p[2], gray[i]);
  }
}

TEST(Png, RejectsNonPng) {
  const auto dir = temp_dir("tio_notpng");
  write_bytes(dir / "x.png", "definitely not png data");
  EXPECT_EQ(code_of([&] { cim::read_png(dir / "x.png"); }), cim::ErrorCode::MalformedFile);
  EXPECT_EQ(code_of([&] { cim::read_png(dir / "nope.png"); }), cim::ErrorCode::IoError);
}

}  // namespace
