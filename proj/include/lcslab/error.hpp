// Copyright 2026 The lcslab Authors
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

namespace lcslab {

/// Process exit codes used by the command line tool.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kIo = 2,
  kValidation = 3,
  kTraining = 4,
};

/// Base of every error raised by the library. Each subclass carries the exit
/// code the CLI reports for it.
class Error : public std::runtime_error {
 public:
  Error(const std::string& what, ExitCode code)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Invalid parameters or flag combinations.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error("configuration error: " + what, ExitCode::kUsage) {}
};

/// Missing, unreadable or truncated files.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what)
      : Error("I/O error: " + what, ExitCode::kIo) {}
};

/// A file that exists but does not follow the expected binary layout.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what)
      : Error("format error: " + what, ExitCode::kIo) {}
};

/// Data that violates a documented invariant (shapes, ranges, border rule).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error("validation error: " + what, ExitCode::kValidation) {}
};

/// Optimization failures: divergence, NaN gradients, empty supervision.
class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what)
      : Error("training error: " + what, ExitCode::kTraining) {}
};

}  // namespace lcslab
