// Copyright 2026 The samdistill Authors
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

namespace samdistill {

// Root of the exception hierarchy. Everything thrown on purpose by this
// library derives from Error; anything else escaping is a bug.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/image dimension mismatches and invalid shapes.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Bad or inconsistent configuration values (unknown keys, out-of-range
// hyperparameters, unsupported enum strings).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// File system and serialization failures: unreadable PNG, truncated
// checkpoint, malformed manifest.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// A precomputed mask requested by id does not exist on disk.
class MissingMaskError : public IoError {
 public:
  explicit MissingMaskError(const std::string& msg) : IoError(msg) {}
};

// Relation statistics were requested for inputs where they are undefined
// (fewer than two non-degenerate regions) and no fallback was allowed.
class DegenerateRelationError : public Error {
 public:
  explicit DegenerateRelationError(const std::string& msg) : Error(msg) {}
};

// Training aborted deliberately, e.g. a non-finite loss.
class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& msg) : Error(msg) {}
};

}  // namespace samdistill
