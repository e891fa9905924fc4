// kws/nn/tensor.hpp

// Copyright 2026 the qbe-kws authors
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

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "kws/common.hpp"

namespace kws::nn {

// Dense row-major tensor.  Real is float for speed runs and double where
// finite-difference checks need the precision.
template <typename Real>
struct Tensor {
  std::vector<int> dims;
  std::vector<Real> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> d) : dims(std::move(d)) {
    data.assign(static_cast<size_t>(element_count(dims)), Real(0));
  }

  static int64_t element_count(const std::vector<int>& dims) {
    int64_t n = 1;
    for (int d : dims) n *= d;
    return n;
  }

  size_t size() const { return data.size(); }
  Real& operator[](size_t i) { return data[i]; }
  const Real& operator[](size_t i) const { return data[i]; }

  bool same_dims(const std::vector<int>& other) const { return dims == other; }

  std::string shape_string() const {
    std::string s = "[";
    for (size_t i = 0; i < dims.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(dims[i]);
    }
    return s + "]";
  }
};

}  // namespace kws::nn
