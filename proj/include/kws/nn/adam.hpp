// kws/nn/adam.hpp

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
#include <vector>

#include "kws/nn/network.hpp"
#include "kws/nn/tensor.hpp"

namespace kws::nn {

// Adam with bias correction and an optional linear learning-rate schedule:
// at step t of total_steps T, lr(t) = lr_start + (lr_end - lr_start) * t/T.
// With total_steps == 0 the rate stays at lr_start.
template <typename Real>
struct AdamState {
  double lr_start = 1e-3;
  double lr_end = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int64_t step_count = 0;
  int64_t total_steps = 0;
  std::vector<LayerParams<Real>> first_moment;
  std::vector<LayerParams<Real>> second_moment;

  void validate() const {
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
      throw InvalidConfig("adam: betas must be in [0,1)");
    if (!(epsilon > 0.0)) throw InvalidConfig("adam: epsilon must be > 0");
  }

  void init_like(const std::vector<LayerParams<Real>>& params) {
    first_moment.clear();
    second_moment.clear();
    for (const auto& p : params) {
      LayerParams<Real> m, v;
      m.weights = Tensor<Real>(p.weights.dims);
      m.bias = Tensor<Real>(p.bias.dims);
      v.weights = Tensor<Real>(p.weights.dims);
      v.bias = Tensor<Real>(p.bias.dims);
      first_moment.push_back(std::move(m));
      second_moment.push_back(std::move(v));
    }
  }

  double learning_rate_at(int64_t t) const {
    if (total_steps <= 0) return lr_start;
    const int64_t clamped = t > total_steps ? total_steps : t;
    return lr_start + (lr_end - lr_start) * static_cast<double>(clamped) /
                          static_cast<double>(total_steps);
  }
};

namespace detail {

template <typename Real>
void adam_update_buffer(Tensor<Real>& param, const Tensor<Real>& grad,
                        Tensor<Real>& m, Tensor<Real>& v, double lr, double b1,
                        double b2, double eps, double bias1, double bias2) {
  for (size_t i = 0; i < param.size(); ++i) {
    const double g = static_cast<double>(grad[i]);
    const double mi = b1 * static_cast<double>(m[i]) + (1.0 - b1) * g;
    const double vi = b2 * static_cast<double>(v[i]) + (1.0 - b2) * g * g;
    m[i] = static_cast<Real>(mi);
    v[i] = static_cast<Real>(vi);
    const double m_hat = mi / bias1;
    const double v_hat = vi / bias2;
    param[i] = static_cast<Real>(static_cast<double>(param[i]) -
                                 lr * m_hat / (std::sqrt(v_hat) + eps));
  }
}

}  // namespace detail

template <typename Real>
void adam_step(AdamState<Real>& state, std::vector<LayerParams<Real>>& params,
               const std::vector<LayerParams<Real>>& grads) {
  state.validate();
  if (params.size() != grads.size())
    throw ShapeMismatch("adam: parameter and gradient layer counts differ");
  if (state.first_moment.empty()) state.init_like(params);
  if (state.first_moment.size() != params.size())
    throw ShapeMismatch("adam: state does not match parameter layout");

  ++state.step_count;
  const double lr = state.learning_rate_at(state.step_count);
  const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));

  for (size_t li = 0; li < params.size(); ++li) {
    if (params[li].weights.dims != grads[li].weights.dims ||
        params[li].bias.dims != grads[li].bias.dims)
      throw ShapeMismatch("adam: gradient shape mismatch at layer " +
                          std::to_string(li));
    detail::adam_update_buffer(params[li].weights, grads[li].weights,
                               state.first_moment[li].weights,
                               state.second_moment[li].weights, lr, state.beta1,
                               state.beta2, state.epsilon, bias1, bias2);
    detail::adam_update_buffer(params[li].bias, grads[li].bias,
                               state.first_moment[li].bias,
                               state.second_moment[li].bias, lr, state.beta1,
                               state.beta2, state.epsilon, bias1, bias2);
  }
}

}  // namespace kws::nn
