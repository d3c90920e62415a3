// Copyright 2026 The Authors.
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

#ifndef EPIC_ERROR_H_
#define EPIC_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace epic {

enum class ErrorCode {
  kInvalidInput,
  kInstanceTooLarge,
  kClassExhausted,
  kDegenerateBudget,
  kNumericalDivergence,
  kDegenerateTarget,
  kNoEffectiveSubset,
  kInvalidSurface,
  kOutOfRegime,
};

std::string_view ErrorCodeName(ErrorCode code);

// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput:
      return "InvalidInput";
    case ErrorCode::kInstanceTooLarge:
      return "InstanceTooLarge";
    case ErrorCode::kClassExhausted:
      return "ClassExhausted";
    case ErrorCode::kDegenerateBudget:
      return "DegenerateBudget";
    case ErrorCode::kNumericalDivergence:
      return "NumericalDivergence";
    case ErrorCode::kDegenerateTarget:
      return "DegenerateTarget";
    case ErrorCode::kNoEffectiveSubset:
      return "NoEffectiveSubset";
    case ErrorCode::kInvalidSurface:
      return "InvalidSurface";
    case ErrorCode::kOutOfRegime:
      return "OutOfRegime";
  }
  return "Unknown";
}

}  // namespace epic

#endif  // EPIC_ERROR_H_
