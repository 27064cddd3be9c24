// Copyright 2026 The apg-control Authors
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

#ifndef APG_TENSOR_HPP_
#define APG_TENSOR_HPP_

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <span>
#include <vector>

#include "apg/errors.hpp"

namespace apg {

// Dense 64-bit value: scalar (1x1), vector (n x 1) or row-major matrix.
struct Tensor {
  int rows = 0;
  int cols = 1;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.data[0] = v;
    return t;
  }
  static Tensor zeros(int r, int c = 1) { return Tensor(r, c); }
  static Tensor from(std::span<const double> v) {
    Tensor t(static_cast<int>(v.size()), 1);
    std::copy(v.begin(), v.end(), t.data.begin());
    return t;
  }
  static Tensor vec(std::initializer_list<double> v) {
    return from(std::span<const double>(v.begin(), v.size()));
  }

  int size() const { return rows * cols; }
  bool empty() const { return data.empty(); }
  bool is_scalar() const { return rows == 1 && cols == 1; }
  bool is_vector() const { return cols == 1; }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  double& operator[](int i) { return data[static_cast<size_t>(i)]; }
  double operator[](int i) const { return data[static_cast<size_t>(i)]; }
  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  double scalar_value() const {
    if (!is_scalar()) throw ShapeError("expected scalar tensor");
    return data[0];
  }

  bool all_finite() const {
    for (double v : data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }
};

}  // namespace apg

#endif  // APG_TENSOR_HPP_
