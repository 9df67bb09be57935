// Copyright 2026 The crkd Authors
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

#include "crkd/common/error.hpp"

namespace crkd {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kUnsupportedResolution: return "unsupported-resolution";
    case ErrorCode::kParse: return "parse-error";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kConfiguration: return "configuration-error";
    case ErrorCode::kIo: return "io-error";
    case ErrorCode::kRuntime: return "runtime-error";
    case ErrorCode::kFrozenParameter: return "frozen-parameter";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace crkd
