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

// Reader and writer for the subset of the NumPy .npy v1.0 container used as the
// tensor interchange format: little- or big-endian float32/float64, C order.

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "cim/error.hpp"

namespace cim::npy {

inline constexpr std::string_view kMagic{"\x93NUMPY", 6};
inline constexpr std::size_t kPreambleSize = 10;  // magic + version + u16 header length
inline constexpr std::size_t kAlignment = 64;

struct Array {
  std::vector<std::size_t> shape;
  std::vector<double> data;  // widened to double
  int source_bits = 64;

  std::size_t rank() const noexcept { return shape.size(); }
};

namespace detail {

[[noreturn]] inline void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedFile, what);
}

inline void skip_space(std::string_view s, std::size_t& pos) {
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
}

inline std::string parse_quoted(std::string_view s, std::size_t& pos) {
  skip_space(s, pos);
  if (pos >= s.size() || (s[pos] != '\'' && s[pos] != '"')) malformed("expected quoted string in header");
  const char quote = s[pos++];
  const auto end = s.find(quote, pos);
  if (end == std::string_view::npos) malformed("unterminated string in header");
  std::string out(s.substr(pos, end - pos));
  pos = end + 1;
  return out;
}

inline void expect(std::string_view s, std::size_t& pos, char c) {
  skip_space(s, pos);
  if (pos >= s.size() || s[pos] != c) malformed(std::string("expected '") + c + "' in header");
  ++pos;
}

inline std::vector<std::size_t> parse_shape(std::string_view s, std::size_t& pos) {
  expect(s, pos, '(');
  std::vector<std::size_t> shape;
  for (;;) {
    skip_space(s, pos);
    if (pos < s.size() && s[pos] == ')') {
      ++pos;
      return shape;
    }
    if (pos >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos]))) {
      malformed("bad shape tuple in header");
    }
    std::size_t value = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      value = value * 10 + static_cast<std::size_t>(s[pos] - '0');
      if (value > (std::size_t{1} << 40)) malformed("shape dimension too large");
      ++pos;
    }
    shape.push_back(value);
    skip_space(s, pos);
    if (pos < s.size() && s[pos] == ',') ++pos;
  }
}

struct Header {
  std::string descr;
  bool fortran_order = false;
  std::vector<std::size_t> shape;
};

inline Header parse_header(std::string_view text) {
  Header h;
  bool seen_descr = false, seen_order = false, seen_shape = false;
  std::size_t pos = 0;
  expect(text, pos, '{');
  for (;;) {
    skip_space(text, pos);
    if (pos < text.size() && text[pos] == '}') break;
    const std::string key = parse_quoted(text, pos);
    expect(text, pos, ':');
    skip_space(text, pos);
    if (key == "descr") {
      h.descr = parse_quoted(text, pos);
      seen_descr = true;
    } else if (key == "fortran_order") {
      if (text.substr(pos, 4) == "True") {
        h.fortran_order = true;
        pos += 4;
      } else if (text.substr(pos, 5) == "False") {
        pos += 5;
      } else {
        malformed("fortran_order must be True or False");
      }
      seen_order = true;
    } else if (key == "shape") {
      h.shape = parse_shape(text, pos);
      seen_shape = true;
    } else {
      malformed("unexpected header key '" + key + "'");
    }
    skip_space(text, pos);
    if (pos < text.size() && text[pos] == ',') ++pos;
  }
  if (!seen_descr || !seen_order || !seen_shape) malformed("header is missing a required key");
  return h;
}

template <class T>
T byteswap_value(T value) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

template <class T>
void decode_payload(std::span<const unsigned char> payload, bool swap, std::vector<double>& out) {
  out.resize(payload.size() / sizeof(T));
  for (std::size_t i = 0; i < out.size(); ++i) {
    T value;
    std::memcpy(&value, payload.data() + i * sizeof(T), sizeof(T));
    if (swap) value = byteswap_value(value);
    out[i] = static_cast<double>(value);
  }
}

}  // namespace detail

/// Parses an in-memory .npy image. Only float32/float64 in C order are accepted;
/// the declared element count must match the payload size exactly.
inline Array parse(std::span<const unsigned char> bytes) {
  using detail::malformed;
  if (bytes.size() < kPreambleSize ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    malformed("missing .npy magic string");
  }
  if (bytes[6] != 1 || bytes[7] != 0) {
    malformed("unsupported .npy version " + std::to_string(bytes[6]) + "." + std::to_string(bytes[7]));
  }
  const std::size_t header_len = static_cast<std::size_t>(bytes[8]) | (static_cast<std::size_t>(bytes[9]) << 8);
  if (bytes.size() < kPreambleSize + header_len) malformed("truncated .npy header");
  const std::string_view header_text(reinterpret_cast<const char*>(bytes.data()) + kPreambleSize, header_len);
  const detail::Header header = detail::parse_header(header_text);

  if (header.fortran_order) malformed("Fortran-order payloads are not supported");
  if (header.descr.size() != 3) throw Error(ErrorCode::UnsupportedDtype, "dtype '" + header.descr + "'");

  const char order = header.descr[0];
  const std::string_view kind = std::string_view(header.descr).substr(1);
  if (order != '<' && order != '>' && order != '=') {
    throw Error(ErrorCode::UnsupportedDtype, "dtype '" + header.descr + "'");
  }
  std::size_t item_size = 0;
  if (kind == "f4") {
    item_size = 4;
  } else if (kind == "f8") {
    item_size = 8;
  } else {
    throw Error(ErrorCode::UnsupportedDtype, "dtype '" + header.descr + "' (only f4/f8 accepted)");
  }

  const bool file_little = order != '>';
  const bool swap = file_little != (std::endian::native == std::endian::little);

  Array out;
  out.shape = header.shape;
  out.source_bits = static_cast<int>(item_size * 8);
  const std::size_t count = std::accumulate(out.shape.begin(), out.shape.end(), std::size_t{1},
                                            std::multiplies<>());
  const auto payload = bytes.subspan(kPreambleSize + header_len);
  if (payload.size() != count * item_size) {
    malformed("payload holds " + std::to_string(payload.size()) + " bytes but header declares " +
              std::to_string(count) + " elements of " + std::to_string(item_size) + " bytes");
  }
  if (item_size == 4) {
    detail::decode_payload<float>(payload, swap, out.data);
  } else {
    detail::decode_payload<double>(payload, swap, out.data);
  }
  return out;
}

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

inline Array read(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

/// Serializes a little-endian C-order array. T selects the on-disk dtype.
template <class T>
  requires std::is_same_v<T, float> || std::is_same_v<T, double>
std::vector<unsigned char> encode(std::span<const std::size_t> shape, std::span<const double> values) {
  const std::size_t count = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  if (count != values.size()) {
    throw Error(ErrorCode::ShapeMismatch, "array shape does not match value count");
  }
  std::string dict = "{'descr': '<";
  dict += std::is_same_v<T, float> ? "f4" : "f8";
  dict += "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    dict += std::to_string(shape[i]);
    if (shape.size() == 1 || i + 1 < shape.size()) dict += ",";
    if (i + 1 < shape.size()) dict += " ";
  }
  dict += "), }";
  const std::size_t unpadded = kPreambleSize + dict.size() + 1;
  const std::size_t padded = (unpadded + kAlignment - 1) / kAlignment * kAlignment;
  dict.append(padded - unpadded, ' ');
  dict += '\n';

  std::vector<unsigned char> out;
  out.reserve(padded + count * sizeof(T));
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  out.push_back(1);
  out.push_back(0);
  out.push_back(static_cast<unsigned char>(dict.size() & 0xff));
  out.push_back(static_cast<unsigned char>((dict.size() >> 8) & 0xff));
  out.insert(out.end(), dict.begin(), dict.end());
  for (const double v : values) {
    T value = static_cast<T>(v);
    if constexpr (std::endian::native == std::endian::big) value = detail::byteswap_value(value);
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
  }
  return out;
}

template <class T = double>
void write(const std::filesystem::path& path, std::span<const std::size_t> shape, std::span<const double> values) {
  const auto bytes = encode<T>(shape, values);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to '" + path.string() + "'");
}

}  // namespace cim::npy
