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

#include <cstdint>

namespace samdistill::core {

// Process-wide invocation counters. They exist so tests and the CLI can
// assert which components actually ran (e.g. a student-only evaluation must
// never touch the segmenter or the refiner). Single-threaded by design.
struct Counters {
  int64_t segmenter_calls = 0;
  int64_t baseline_forwards = 0;
  int64_t refiner_forwards = 0;
  int64_t perceptual_forwards = 0;

  void reset() { *this = Counters{}; }
};

Counters& counters();

}  // namespace samdistill::core
