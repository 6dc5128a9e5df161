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

#include <stdexcept>
#include <string>
#include <string_view>

namespace cim {

enum class ErrorCode {
  MalformedFile,
  UnsupportedDtype,
  UnsupportedRank,
  NonFiniteValue,
  EmptyBox,
  OutOfImageBounds,
  ShapeMismatch,
  SingularSystem,
  NonFiniteIterate,
  InstanceTooLarge,
  InvalidConfig,
  InvalidThreshold,
  NoBoxes,
  EmptyInput,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::UnsupportedRank: return "UnsupportedRank";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::EmptyBox: return "EmptyBox";
    case ErrorCode::OutOfImageBounds: return "OutOfImageBounds";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NonFiniteIterate: return "NonFiniteIterate";
    case ErrorCode::InstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidThreshold: return "InvalidThreshold";
    case ErrorCode::NoBoxes: return "NoBoxes";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto a stable exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace cim
