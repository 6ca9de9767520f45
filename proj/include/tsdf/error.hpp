// Copyright 2026 The tsdf Authors
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

namespace tsdf {

enum class ErrorKind {
  Usage,
  Io,
  Parse,
  InvalidGraph,
  MissingSpec,
  Infeasible,
  SearchSpaceTooLarge,
  EmptyFrontier,
  InvalidModel,
  Mismatch,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::InvalidGraph: return "invalid-graph";
    case ErrorKind::MissingSpec: return "missing-spec";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::SearchSpaceTooLarge: return "search-space-too-large";
    case ErrorKind::EmptyFrontier: return "empty-frontier";
    case ErrorKind::InvalidModel: return "invalid-model";
    case ErrorKind::Mismatch: return "mismatch";
  }
  return "unknown";
}

// All library failures are reported through this one exception type; the
// kind drives the CLI exit-code mapping.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace tsdf
