// tests/gradcheck.hpp

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

// Central finite-difference oracle for network gradients.  Every loss
// evaluation reseeds the train-mode rng identically, so dropout masks and
// noise draws are frozen across the perturbed evaluations.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "kws/nn/network.hpp"
#include "kws/rng.hpp"

namespace kws::testing {

// Scalar loss of the network output given a fixed forward.  The callable
// returns the loss and, when grad is non-null, d(loss)/d(output).
using LossProbe = std::function<double(const nn::Tensor<double>& output,
                                       nn::Tensor<double>* grad)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  size_t checked = 0;
};

inline double rel_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
}

// Compares analytic parameter and input gradients against central finite
// differences with the given step.
inline GradCheckResult gradient_check(nn::Network<double>& net,
                                      const nn::Tensor<double>& input,
                                      const LossProbe& loss, uint64_t rng_seed,
                                      double step = 1e-5) {
  auto eval = [&]() {
    Rng rng(rng_seed);
    const auto out = net.forward(input, nn::Mode::train, &rng);
    return loss(out, nullptr);
  };

  // analytic
  Rng rng(rng_seed);
  nn::ForwardCache<double> cache;
  const auto out = net.forward(input, nn::Mode::train, &rng, &cache);
  nn::Tensor<double> out_grad;
  (void)loss(out, &out_grad);
  nn::Tensor<double> input_grad;
  const auto grads = net.backward(cache, out_grad, &input_grad);

  GradCheckResult result;
  auto check_buffer = [&](nn::Tensor<double>& buf, const nn::Tensor<double>& analytic) {
    for (size_t i = 0; i < buf.size(); ++i) {
      const double saved = buf[i];
      buf[i] = saved + step;
      const double lp = eval();
      buf[i] = saved - step;
      const double lm = eval();
      buf[i] = saved;
      const double numeric = (lp - lm) / (2.0 * step);
      result.max_rel_error = std::max(result.max_rel_error, rel_error(analytic[i], numeric));
      ++result.checked;
    }
  };

  for (size_t li = 0; li < net.params().size(); ++li) {
    check_buffer(net.params()[li].weights, grads[li].weights);
    check_buffer(net.params()[li].bias, grads[li].bias);
  }
  // input gradient through a const_cast-free copy
  nn::Tensor<double> in_copy = input;
  auto eval_input = [&]() {
    Rng r(rng_seed);
    const auto o = net.forward(in_copy, nn::Mode::train, &r);
    return loss(o, nullptr);
  };
  for (size_t i = 0; i < in_copy.size(); ++i) {
    const double saved = in_copy[i];
    in_copy[i] = saved + step;
    const double lp = eval_input();
    in_copy[i] = saved - step;
    const double lm = eval_input();
    in_copy[i] = saved;
    const double numeric = (lp - lm) / (2.0 * step);
    result.max_rel_error =
        std::max(result.max_rel_error, rel_error(input_grad[i], numeric));
    ++result.checked;
  }
  return result;
}

// Finite differences are only valid away from relu and maxpool decision
// boundaries: a preactivation within +-step of zero, or a pool window
// whose top two values nearly tie, puts the two perturbed evaluations on
// different smooth pieces.  This measures the smallest such margin for a
// train-mode forward so callers can redraw degenerate instances.
inline double kink_margin(const nn::Network<double>& net,
                          const nn::Tensor<double>& input, uint64_t rng_seed) {
  Rng rng(rng_seed);
  nn::ForwardCache<double> cache;
  (void)net.forward(input, nn::Mode::train, &rng, &cache);
  double margin = std::numeric_limits<double>::infinity();
  for (size_t li = 0; li < net.specs().size(); ++li) {
    const auto& spec = net.specs()[li];
    if (spec.kind == nn::LayerKind::relu) {
      for (double v : cache.inputs[li].data) margin = std::min(margin, std::abs(v));
    } else if (spec.kind == nn::LayerKind::maxpool && spec.pool_size > 1) {
      const auto& x = cache.inputs[li];
      const int channels = x.dims[1];
      const int t_out = x.dims[0] / spec.pool_size;
      for (int t = 0; t < t_out; ++t) {
        for (int c = 0; c < channels; ++c) {
          double top = -1e300, second = -1e300;
          for (int k = 0; k < spec.pool_size; ++k) {
            const double v =
                x.data[static_cast<size_t>(t * spec.pool_size + k) * channels + c];
            if (v > top) {
              second = top;
              top = v;
            } else if (v > second) {
              second = v;
            }
          }
          // windows flattened to zero by a preceding relu are constant
          // under small perturbations; the tie is not a hazard there
          if (top == 0.0 && second == 0.0) continue;
          margin = std::min(margin, top - second);
        }
      }
    }
  }
  return margin;
}

// Fixed random linear probe: loss = sum_i c_i * out_i.  Smooth in the
// output, so it exercises any layer kind.
inline LossProbe linear_probe(size_t out_size, uint64_t seed) {
  auto coeffs = std::make_shared<std::vector<double>>();
  Rng rng(seed);
  for (size_t i = 0; i < out_size; ++i) coeffs->push_back(rng.uniform(-1.0, 1.0));
  return [coeffs](const nn::Tensor<double>& out, nn::Tensor<double>* grad) {
    double loss = 0.0;
    if (grad) *grad = nn::Tensor<double>(out.dims);
    for (size_t i = 0; i < out.size(); ++i) {
      loss += (*coeffs)[i] * out[i];
      if (grad) (*grad)[i] = (*coeffs)[i];
    }
    return loss;
  };
}

inline nn::Tensor<double> random_tensor(const std::vector<int>& dims, Rng& rng,
                                        double scale = 1.0) {
  nn::Tensor<double> t(dims);
  for (auto& v : t.data) v = rng.gaussian() * scale;
  return t;
}

}  // namespace kws::testing
