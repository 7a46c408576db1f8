// Copyright 2026 The PushForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PUSHFORGE_ERROR_HPP_
#define PUSHFORGE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace pushforge {

/// Classifies every failure the toolkit reports. The CLI maps `kUsage` to
/// exit code 2 and everything else to exit code 1.
enum class ErrorCode {
  kUsage,
  kInvalidStats,
  kParse,
  kValidation,
  kDuplicate,
  kDomain,
  kExport,
  kUnavailable,
  kProtocol,
  kRequest,
  kGeneration,
  kSplit,
  kDivergence,
  kState,
  kVersion,
  kFormat,
  kIo,
  kConfig,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage: return "usage";
    case ErrorCode::kInvalidStats: return "invalid-stats";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kDuplicate: return "duplicate";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kExport: return "export";
    case ErrorCode::kUnavailable: return "unavailable";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kRequest: return "request";
    case ErrorCode::kGeneration: return "generation";
    case ErrorCode::kSplit: return "split";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kState: return "state";
    case ErrorCode::kVersion: return "version";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + " error: " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pushforge

#endif  // PUSHFORGE_ERROR_HPP_
