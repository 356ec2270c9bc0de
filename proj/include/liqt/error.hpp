// Copyright 2026 The li-qt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace liqt {

enum class ErrorCode {
  InvalidArgument,
  MismatchedDimensions,
  DegenerateProbability,
  EmptyLog,
  InsufficientData,
  NoSignal,
  NotHermitian,
  NotPure,
  InsufficientDesign,
  NonSeparable,
  PhaseUndefined,
  UnstableStep,
  BoundaryContact,
  SchemaMismatch,
  CorruptData,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MismatchedDimensions: return "MismatchedDimensions";
    case ErrorCode::DegenerateProbability: return "DegenerateProbability";
    case ErrorCode::EmptyLog: return "EmptyLog";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NoSignal: return "NoSignal";
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::NotPure: return "NotPure";
    case ErrorCode::InsufficientDesign: return "InsufficientDesign";
    case ErrorCode::NonSeparable: return "NonSeparable";
    case ErrorCode::PhaseUndefined: return "PhaseUndefined";
    case ErrorCode::UnstableStep: return "UnstableStep";
    case ErrorCode::BoundaryContact: return "BoundaryContact";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::CorruptData: return "CorruptData";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Scientific-contract failures, as opposed to bad input. The CLI maps these
/// to exit code 3.
constexpr bool is_contract_failure(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoSignal:
    case ErrorCode::NonSeparable:
    case ErrorCode::NotPure:
    case ErrorCode::UnstableStep:
    case ErrorCode::BoundaryContact:
    case ErrorCode::DegenerateProbability:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace liqt
