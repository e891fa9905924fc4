// kws/feature_matrix.hpp

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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kws/common.hpp"

namespace kws {

enum class FeatureKind : uint8_t { mfcc39 = 0, sae39 = 1, imported = 2 };

inline const char* feature_kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::mfcc39: return "mfcc39";
    case FeatureKind::sae39: return "sae39";
    case FeatureKind::imported: return "imported";
  }
  return "?";
}

// A T x D sequence of feature frames, row-major.
struct FeatureMatrix {
  int num_frames = 0;
  int dim = 0;
  float frame_shift_ms = 10.0f;
  FeatureKind kind = FeatureKind::mfcc39;
  std::vector<float> data;

  FeatureMatrix() = default;
  FeatureMatrix(int t, int d, FeatureKind k = FeatureKind::mfcc39,
                float shift_ms = 10.0f)
      : num_frames(t),
        dim(d),
        frame_shift_ms(shift_ms),
        kind(k),
        data(static_cast<size_t>(t) * static_cast<size_t>(d), 0.0f) {}

  std::span<float> row(int t) {
    return {data.data() + static_cast<size_t>(t) * dim, static_cast<size_t>(dim)};
  }
  std::span<const float> row(int t) const {
    return {data.data() + static_cast<size_t>(t) * dim, static_cast<size_t>(dim)};
  }

  float& at(int t, int d) { return data[static_cast<size_t>(t) * dim + d]; }
  float at(int t, int d) const { return data[static_cast<size_t>(t) * dim + d]; }

  bool same_shape_family(const FeatureMatrix& o) const {
    return dim == o.dim && kind == o.kind;
  }
};

using FeatureMap = std::map<std::string, FeatureMatrix>;

}  // namespace kws
