/*
 * Copyright 2026 The asuflex Authors. All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace asuflex {

enum class ErrorCode {
  InvalidArgument,
  InvalidOverride,
  DimensionMismatch,
  ParseError,
  GapError,
  ShortProfile,
  OutOfRange,
  MVIndexOutOfRange,
  RankDeficient,
  Unstable,
  NonConvex,
  NonFiniteLoss,
  EmptyBuffer,
  EpisodeFinished,
  SchemaMismatch,
  CorruptFile,
  ConfigError,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidOverride: return "InvalidOverride";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::GapError: return "GapError";
    case ErrorCode::ShortProfile: return "ShortProfile";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::MVIndexOutOfRange: return "MVIndexOutOfRange";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::Unstable: return "Unstable";
    case ErrorCode::NonConvex: return "NonConvex";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::EmptyBuffer: return "EmptyBuffer";
    case ErrorCode::EpisodeFinished: return "EpisodeFinished";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace asuflex
