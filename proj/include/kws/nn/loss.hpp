// kws/nn/loss.hpp

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

#include <cmath>
#include <span>
#include <vector>

#include "kws/nn/tensor.hpp"

namespace kws::nn {

inline constexpr double kProbClamp = 1e-7;

// Sum over components of the binary cross-entropy between sigmoid outputs
// and soft targets in [0,1].  Predictions are clamped to
// [kProbClamp, 1-kProbClamp] before the logs; gradients are zero where the
// clamp is active.
template <typename Real>
double summed_cross_entropy(const Tensor<Real>& pred, const Tensor<Real>& target,
                            Tensor<Real>* grad = nullptr) {
  if (pred.size() != target.size())
    throw ShapeMismatch("summed_cross_entropy: shapes differ");
  if (grad) *grad = Tensor<Real>(pred.dims);
  double loss = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double y = static_cast<double>(target[i]);
    double p = static_cast<double>(pred[i]);
    const bool clamped = p < kProbClamp || p > 1.0 - kProbClamp;
    if (p < kProbClamp) p = kProbClamp;
    if (p > 1.0 - kProbClamp) p = 1.0 - kProbClamp;
    loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    if (grad && !clamped)
      (*grad)[i] = static_cast<Real>(-y / p + (1.0 - y) / (1.0 - p));
  }
  return loss;
}

template <typename Real>
std::vector<Real> softmax(std::span<const Real> logits) {
  Real max_v = logits[0];
  for (Real v : logits) max_v = std::max(max_v, v);
  std::vector<Real> p(logits.size());
  Real sum = Real(0);
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - max_v);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

// Categorical cross-entropy fused with softmax, on logits.
template <typename Real>
double softmax_cross_entropy(const Tensor<Real>& logits, int label,
                             Tensor<Real>* grad = nullptr) {
  if (label < 0 || static_cast<size_t>(label) >= logits.size())
    throw ShapeMismatch("softmax_cross_entropy: label out of range");
  const std::vector<Real> p = softmax<Real>({logits.data.data(), logits.size()});
  if (grad) {
    *grad = Tensor<Real>(logits.dims);
    for (size_t i = 0; i < p.size(); ++i) (*grad)[i] = p[i];
    (*grad)[static_cast<size_t>(label)] -= Real(1);
  }
  const double pl = std::max(static_cast<double>(p[static_cast<size_t>(label)]), 1e-300);
  return -std::log(pl);
}

}  // namespace kws::nn
