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

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "samdistill/core/error.hpp"

namespace samdistill::core {

// Deterministic random source. All sampling paths are written out by hand
// (instead of std::uniform_real_distribution etc.) so that a given seed
// produces the same stream on every platform and standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive. Uses rejection sampling
  // so the result is exactly uniform and platform independent.
  uint64_t uniform_int(uint64_t n) {
    if (n == 0) throw Error("Rng::uniform_int: n must be positive");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller. The spare value is discarded on purpose:
  // a one-draw-per-call stream keeps serialized state equal to the engine
  // state, which checkpoint round-trips rely on.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double stddev) {
    return mean + stddev * normal();
  }

  // In-place Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent child stream. FNV-1a over the tag, mixed with the seed, so
  // components draw from unrelated streams regardless of call order.
  static uint64_t derive(uint64_t seed, const std::string& tag) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : tag) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    // splitmix64 finalizer to decorrelate nearby seeds.
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ull;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebull;
    h ^= h >> 31;
    return h;
  }

  std::string serialize() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void deserialize(const std::string& state) {
    std::istringstream is(state);
    is >> engine_;
    if (is.fail()) throw IoError("Rng::deserialize: malformed engine state");
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace samdistill::core
