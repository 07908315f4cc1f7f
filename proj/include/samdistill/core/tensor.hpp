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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "samdistill/core/error.hpp"

namespace samdistill::core {

using Shape = std::vector<int64_t>;

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) {
    if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(s));
    n *= d;
  }
  return n;
}

// Dense row-major n-d array of scalars. Deliberately minimal: the layer and
// loss code below works on raw spans, so this only has to own memory, carry
// a shape, and offer indexed access for the 2-d and 3-d cases that occur.
template <class S>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(Shape shape)
      : shape_(std::move(shape)),
        data_(static_cast<size_t>(shape_numel(shape_)), S(0)) {}

  TensorT(Shape shape, S fill)
      : shape_(std::move(shape)),
        data_(static_cast<size_t>(shape_numel(shape_)), fill) {}

  TensorT(Shape shape, std::vector<S> values) : shape_(std::move(shape)) {
    if (static_cast<int64_t>(values.size()) != shape_numel(shape_)) {
      throw ShapeError("value count does not match shape " + shape_str(shape_));
    }
    data_ = std::move(values);
  }

  static TensorT zeros(Shape shape) { return TensorT(std::move(shape)); }
  static TensorT full(Shape shape, S v) { return TensorT(std::move(shape), v); }
  static TensorT scalar(S v) { return TensorT(Shape{1}, v); }

  static TensorT zeros_like(const TensorT& other) {
    return TensorT(other.shape_);
  }

  const Shape& shape() const { return shape_; }
  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
  int64_t dim(int64_t i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool defined() const { return !shape_.empty(); }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }

  S& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  S operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // 2-d accessor, shape [rows, cols].
  S& at2(int64_t r, int64_t c) {
    return data_[static_cast<size_t>(r * shape_[1] + c)];
  }
  S at2(int64_t r, int64_t c) const {
    return data_[static_cast<size_t>(r * shape_[1] + c)];
  }

  // 3-d accessor, shape [channels, height, width].
  S& at3(int64_t c, int64_t y, int64_t x) {
    return data_[static_cast<size_t>((c * shape_[1] + y) * shape_[2] + x)];
  }
  S at3(int64_t c, int64_t y, int64_t x) const {
    return data_[static_cast<size_t>((c * shape_[1] + y) * shape_[2] + x)];
  }

  bool same_shape(const TensorT& other) const {
    return shape_ == other.shape_;
  }

  bool all_finite() const {
    for (S v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  S item() const {
    if (numel() != 1) {
      throw ShapeError("item() on tensor of shape " + shape_str(shape_));
    }
    return data_[0];
  }

  void fill(S v) { std::fill(data_.begin(), data_.end(), v); }

  template <class T>
  TensorT<T> cast() const {
    TensorT<T> out(shape_);
    for (int64_t i = 0; i < numel(); ++i)
      out[i] = static_cast<T>(data_[static_cast<size_t>(i)]);
    return out;
  }

  void add_(const TensorT& other) {
    check_same_shape(other, "add_");
    for (int64_t i = 0; i < numel(); ++i)
      data_[static_cast<size_t>(i)] += other[i];
  }

  void check_same_shape(const TensorT& other, const char* where) const {
    if (!same_shape(other)) {
      throw ShapeError(std::string(where) + ": shape mismatch " +
                       shape_str(shape_) + " vs " + shape_str(other.shape_));
    }
  }

 private:
  Shape shape_;
  std::vector<S> data_;
};

using Tensor = TensorT<double>;
using TensorF = TensorT<float>;

}  // namespace samdistill::core
