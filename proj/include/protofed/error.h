// Copyright 2026 The Protofed Authors
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

#ifndef PROTOFED_ERROR_H_
#define PROTOFED_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace protofed {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kDegenerateInput,
  kInvalidConfig,
  kParse,
  kDivergence,
  kMissingClass,
  kOutOfRange,
  kWraparound,
  kThresholdUnmet,
  kCombinationFailure,
  kKeyMismatch,
  kPrimeGenerationTimeout,
  kModelHeterogeneity,
  kDecode,
  kTransport,
  kProtocol,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above so
// that callers (and the CLI's machine-readable error line) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace protofed

#endif  // PROTOFED_ERROR_H_
