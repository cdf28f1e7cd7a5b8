/* Copyright 2026 The diffgo Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef DIFFGO_ERROR_H_
#define DIFFGO_ERROR_H_

#include <stdexcept>
#include <string>
#include <vector>

namespace diffgo {

enum class ErrorCode {
  kInvalidArgument,
  kSingularMatrix,
  kNotPsd,
  kDegenerateBasis,
  kConvergence,
  kInsufficientData,
  kBasisMismatch,
  kUnsupportedFormat,
  kCorruptMessage,
  kMalformedMessage,
  kFrameTooLarge,
  kTruncatedFrame,
  kIo,
};

const char* error_code_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Raised by the iterative projection when it runs out of iterations; keeps
// the last iterate so callers can inspect or reuse it.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate,
                   double relative_residual)
      : Error(ErrorCode::kConvergence, what),
        last_iterate_(std::move(last_iterate)),
        relative_residual_(relative_residual) {}

  const std::vector<double>& last_iterate() const { return last_iterate_; }
  double relative_residual() const { return relative_residual_; }

 private:
  std::vector<double> last_iterate_;
  double relative_residual_;
};

}  // namespace diffgo

#endif  // DIFFGO_ERROR_H_
