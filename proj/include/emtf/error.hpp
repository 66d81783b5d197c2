// Copyright (c) 2026 The emtf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace emtf {

enum class ErrorKind {
  kInvalidInput,
  kConfig,
  kFormat,
  kAlignment,
  kRegistry,
  kUnknownWord,
  kEncoding,
  kShape,
  kIo,
  kState,
};

const char* to_string(ErrorKind kind);

// Single exception type carrying a machine-readable kind. CLI entry points
// map the kind to the one-line error record and a nonzero exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kAlignment: return "alignment";
    case ErrorKind::kRegistry: return "registry";
    case ErrorKind::kUnknownWord: return "unknown-word";
    case ErrorKind::kEncoding: return "encoding";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kState: return "state";
  }
  return "unknown";
}

}  // namespace emtf
