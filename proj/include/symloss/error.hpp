// Copyright 2026 The symloss Authors
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

namespace symloss {

enum class ErrorKind {
  kInvalidInput,
  kInvalidLabel,
  kUnsupportedGradient,
  kUnsupported,
  kDomain,
  kDimensionMismatch,
  kParse,
  kNonFinite,
  kIo,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid input";
    case ErrorKind::kInvalidLabel: return "invalid label";
    case ErrorKind::kUnsupportedGradient: return "unsupported gradient";
    case ErrorKind::kUnsupported: return "unsupported";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kNonFinite: return "non-finite value";
    case ErrorKind::kIo: return "i/o error";
  }
  return "error";
}

/// Single exception type for the library; callers switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failure carrying the 1-based line number it occurred on (0 if none).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorKind::kParse, line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace symloss
