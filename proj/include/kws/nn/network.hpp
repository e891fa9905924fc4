// kws/nn/network.hpp

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
#include <optional>
#include <vector>

#include "kws/nn/tensor.hpp"
#include "kws/rng.hpp"

namespace kws::nn {

// The layer vocabulary covers exactly what the two spotter architectures
// need: 1-D convolution over time with features as channels, max pooling
// over time, dense layers, relu/sigmoid, dropout with inverted scaling,
// train-time additive Gaussian noise, and flatten.
enum class LayerKind : uint8_t {
  conv1d_over_time = 0,
  maxpool = 1,
  dense = 2,
  relu = 3,
  sigmoid = 4,
  dropout = 5,
  gaussian_noise = 6,
  flatten = 7,
};

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  int filters = 0;       // conv1d_over_time
  int kernel_width = 0;  // conv1d_over_time
  int stride = 1;        // conv1d_over_time
  int pool_size = 0;     // maxpool
  int units = 0;         // dense
  double rate = 0.0;     // dropout
  double sigma = 0.0;    // gaussian_noise

  static LayerSpec conv1d(int filters, int kernel_width, int stride = 1) {
    LayerSpec s;
    s.kind = LayerKind::conv1d_over_time;
    s.filters = filters;
    s.kernel_width = kernel_width;
    s.stride = stride;
    return s;
  }
  static LayerSpec maxpool(int pool_size) {
    LayerSpec s;
    s.kind = LayerKind::maxpool;
    s.pool_size = pool_size;
    return s;
  }
  static LayerSpec dense(int units) {
    LayerSpec s;
    s.kind = LayerKind::dense;
    s.units = units;
    return s;
  }
  static LayerSpec relu() {
    LayerSpec s;
    s.kind = LayerKind::relu;
    return s;
  }
  static LayerSpec sigmoid() {
    LayerSpec s;
    s.kind = LayerKind::sigmoid;
    return s;
  }
  static LayerSpec dropout(double rate) {
    LayerSpec s;
    s.kind = LayerKind::dropout;
    s.rate = rate;
    return s;
  }
  static LayerSpec gaussian_noise(double sigma) {
    LayerSpec s;
    s.kind = LayerKind::gaussian_noise;
    s.sigma = sigma;
    return s;
  }
  static LayerSpec flatten() {
    LayerSpec s;
    s.kind = LayerKind::flatten;
    return s;
  }

  void validate() const {
    switch (kind) {
      case LayerKind::conv1d_over_time:
        if (filters < 1 || kernel_width < 1 || stride < 1)
          throw InvalidConfig("conv1d params must be positive");
        break;
      case LayerKind::maxpool:
        if (pool_size < 1) throw InvalidConfig("pool_size must be positive");
        break;
      case LayerKind::dense:
        if (units < 1) throw InvalidConfig("dense units must be positive");
        break;
      case LayerKind::dropout:
        if (!(rate >= 0.0 && rate < 1.0))
          throw InvalidConfig("dropout rate must be in [0,1)");
        break;
      case LayerKind::gaussian_noise:
        if (sigma < 0.0) throw InvalidConfig("noise sigma must be >= 0");
        break;
      default:
        break;
    }
  }
};

enum class Mode { train, infer };

template <typename Real>
struct LayerParams {
  Tensor<Real> weights;
  Tensor<Real> bias;
  bool empty() const { return weights.size() == 0 && bias.size() == 0; }
};

// Everything backward needs from the matching forward call: per-layer
// inputs, dropout masks, pool argmax indices and sigmoid outputs.
template <typename Real>
struct ForwardCache {
  uint64_t revision = 0;
  Mode mode = Mode::infer;
  std::vector<Tensor<Real>> inputs;
  std::vector<Tensor<Real>> masks;           // dropout
  std::vector<std::vector<int>> argmax;      // maxpool
  std::vector<Tensor<Real>> sigmoid_output;  // sigmoid
};

template <typename Real>
class Network {
 public:
  Network() = default;

  // Builds the parameter set for the given input shape.  Weights use
  // uniform init in +-sqrt(6/(fan_in+fan_out)), biases start at zero.
  Network(std::vector<int> input_dims, std::vector<LayerSpec> layer_specs,
          Rng& init_rng)
      : input_dims_(std::move(input_dims)), specs_(std::move(layer_specs)) {
    std::vector<int> shape = input_dims_;
    for (const LayerSpec& spec : specs_) {
      spec.validate();
      LayerParams<Real> p;
      switch (spec.kind) {
        case LayerKind::conv1d_over_time: {
          if (shape.size() != 2)
            throw ShapeMismatch("conv1d needs a (time, channels) input, got " +
                                Tensor<Real>(shape).shape_string());
          const int t = shape[0], c = shape[1];
          if (t < spec.kernel_width)
            throw ShapeMismatch("conv1d kernel wider than input time axis");
          p.weights = Tensor<Real>({spec.filters, c, spec.kernel_width});
          p.bias = Tensor<Real>({spec.filters});
          const double bound =
              std::sqrt(6.0 / (static_cast<double>(c) * spec.kernel_width +
                               static_cast<double>(spec.filters) * spec.kernel_width));
          for (auto& w : p.weights.data)
            w = static_cast<Real>(init_rng.uniform(-bound, bound));
          shape = {(t - spec.kernel_width) / spec.stride + 1, spec.filters};
          break;
        }
        case LayerKind::maxpool: {
          if (shape.size() != 2)
            throw ShapeMismatch("maxpool needs a (time, channels) input");
          if (shape[0] < spec.pool_size)
            throw ShapeMismatch("maxpool window longer than input time axis");
          shape = {shape[0] / spec.pool_size, shape[1]};
          break;
        }
        case LayerKind::dense: {
          if (shape.size() != 1)
            throw ShapeMismatch("dense needs a flat input; add a flatten layer");
          const int n = shape[0];
          p.weights = Tensor<Real>({spec.units, n});
          p.bias = Tensor<Real>({spec.units});
          const double bound = std::sqrt(6.0 / (static_cast<double>(n) + spec.units));
          for (auto& w : p.weights.data)
            w = static_cast<Real>(init_rng.uniform(-bound, bound));
          shape = {spec.units};
          break;
        }
        case LayerKind::flatten: {
          int n = 1;
          for (int d : shape) n *= d;
          shape = {n};
          break;
        }
        default:
          break;  // shape-preserving layers
      }
      params_.push_back(std::move(p));
      output_shapes_.push_back(shape);
    }
  }

  const std::vector<LayerSpec>& specs() const { return specs_; }
  const std::vector<int>& input_dims() const { return input_dims_; }
  const std::vector<int>& output_dims() const { return output_shapes_.back(); }
  std::vector<LayerParams<Real>>& params() { return params_; }
  const std::vector<LayerParams<Real>>& params() const { return params_; }
  uint64_t revision() const { return revision_; }
  void bump_revision() { ++revision_; }

  // Dropout and Gaussian noise draw from rng in train mode only; inference
  // never touches it and is a pure function of the parameters and input.
  Tensor<Real> forward(const Tensor<Real>& input, Mode mode, Rng* rng,
                       ForwardCache<Real>* cache = nullptr) const {
    if (!input.same_dims(input_dims_))
      throw ShapeMismatch("network input is " + input.shape_string() +
                          ", expected " + Tensor<Real>(input_dims_).shape_string());
    if (cache) {
      cache->revision = revision_;
      cache->mode = mode;
      cache->inputs.assign(specs_.size(), {});
      cache->masks.assign(specs_.size(), {});
      cache->argmax.assign(specs_.size(), {});
      cache->sigmoid_output.assign(specs_.size(), {});
    }
    Tensor<Real> x = input;
    for (size_t li = 0; li < specs_.size(); ++li) {
      if (cache) cache->inputs[li] = x;
      x = apply_layer(li, std::move(x), mode, rng, cache);
    }
    return x;
  }

  // Gradients for every parameter, plus optionally the input gradient.
  // The cache must come from a forward pass over the current parameters.
  std::vector<LayerParams<Real>> backward(const ForwardCache<Real>& cache,
                                          const Tensor<Real>& output_grad,
                                          Tensor<Real>* input_grad = nullptr) const {
    if (cache.revision != revision_)
      throw StaleCache("forward cache is older than the network parameters");
    std::vector<LayerParams<Real>> grads(specs_.size());
    for (size_t li = 0; li < specs_.size(); ++li) {
      grads[li].weights = Tensor<Real>(params_[li].weights.dims);
      grads[li].bias = Tensor<Real>(params_[li].bias.dims);
    }
    Tensor<Real> g = output_grad;
    for (size_t i = specs_.size(); i-- > 0;) {
      g = backprop_layer(i, cache, g, grads[i]);
    }
    if (input_grad) *input_grad = std::move(g);
    return grads;
  }

 private:
  Tensor<Real> apply_layer(size_t li, Tensor<Real> x, Mode mode, Rng* rng,
                           ForwardCache<Real>* cache) const {
    const LayerSpec& spec = specs_[li];
    switch (spec.kind) {
      case LayerKind::conv1d_over_time: {
        if (x.dims.size() != 2 || x.dims[1] != params_[li].weights.dims[1] ||
            x.dims[0] < spec.kernel_width)
          throw ShapeMismatch("conv1d input is " + x.shape_string());
        const int t_in = x.dims[0], c_in = x.dims[1];
        const int t_out = (t_in - spec.kernel_width) / spec.stride + 1;
        Tensor<Real> y({t_out, spec.filters});
        const auto& w = params_[li].weights;
        const auto& b = params_[li].bias;
        for (int t = 0; t < t_out; ++t) {
          const int t0 = t * spec.stride;
          for (int f = 0; f < spec.filters; ++f) {
            Real acc = b[static_cast<size_t>(f)];
            const size_t wbase =
                static_cast<size_t>(f) * c_in * spec.kernel_width;
            for (int k = 0; k < spec.kernel_width; ++k) {
              const size_t xbase = static_cast<size_t>(t0 + k) * c_in;
              for (int c = 0; c < c_in; ++c) {
                acc += x[xbase + c] * w[wbase + static_cast<size_t>(c) * spec.kernel_width + k];
              }
            }
            y[static_cast<size_t>(t) * spec.filters + f] = acc;
          }
        }
        return y;
      }
      case LayerKind::maxpool: {
        if (x.dims.size() != 2 || x.dims[0] < spec.pool_size)
          throw ShapeMismatch("maxpool input is " + x.shape_string());
        const int t_in = x.dims[0], c = x.dims[1];
        const int t_out = t_in / spec.pool_size;
        Tensor<Real> y({t_out, c});
        std::vector<int> arg(static_cast<size_t>(t_out) * c);
        for (int t = 0; t < t_out; ++t) {
          for (int ch = 0; ch < c; ++ch) {
            int best = t * spec.pool_size;
            Real best_v = x[static_cast<size_t>(best) * c + ch];
            for (int k = 1; k < spec.pool_size; ++k) {
              const int idx = t * spec.pool_size + k;
              const Real v = x[static_cast<size_t>(idx) * c + ch];
              if (v > best_v) {
                best_v = v;
                best = idx;
              }
            }
            y[static_cast<size_t>(t) * c + ch] = best_v;
            arg[static_cast<size_t>(t) * c + ch] = best;
          }
        }
        if (cache) cache->argmax[li] = std::move(arg);
        return y;
      }
      case LayerKind::dense: {
        if (x.dims.size() != 1 || x.dims[0] != params_[li].weights.dims[1])
          throw ShapeMismatch("dense input is " + x.shape_string());
        const int n = x.dims[0];
        Tensor<Real> y({spec.units});
        const auto& w = params_[li].weights;
        for (int u = 0; u < spec.units; ++u) {
          Real acc = params_[li].bias[static_cast<size_t>(u)];
          const size_t base = static_cast<size_t>(u) * n;
          for (int i = 0; i < n; ++i) acc += w[base + i] * x[static_cast<size_t>(i)];
          y[static_cast<size_t>(u)] = acc;
        }
        return y;
      }
      case LayerKind::relu: {
        for (auto& v : x.data) v = v > Real(0) ? v : Real(0);
        return x;
      }
      case LayerKind::sigmoid: {
        for (auto& v : x.data) {
          if (v >= Real(0)) {
            v = Real(1) / (Real(1) + std::exp(-v));
          } else {
            const Real e = std::exp(v);
            v = e / (Real(1) + e);
          }
        }
        if (cache) cache->sigmoid_output[li] = x;
        return x;
      }
      case LayerKind::dropout: {
        if (mode == Mode::infer || spec.rate == 0.0) return x;
        if (!rng) throw InvalidConfig("dropout in train mode needs an rng");
        Tensor<Real> mask(x.dims);
        const Real keep_scale = static_cast<Real>(1.0 / (1.0 - spec.rate));
        for (auto& m : mask.data)
          m = rng->uniform() < spec.rate ? Real(0) : keep_scale;
        for (size_t i = 0; i < x.size(); ++i) x[i] *= mask[i];
        if (cache) cache->masks[li] = std::move(mask);
        return x;
      }
      case LayerKind::gaussian_noise: {
        if (mode == Mode::infer || spec.sigma == 0.0) return x;
        if (!rng) throw InvalidConfig("gaussian noise in train mode needs an rng");
        for (auto& v : x.data)
          v += static_cast<Real>(rng->gaussian() * spec.sigma);
        return x;
      }
      case LayerKind::flatten: {
        int n = 1;
        for (int d : x.dims) n *= d;
        x.dims = {n};
        return x;
      }
    }
    throw InvalidConfig("unknown layer kind");
  }

  Tensor<Real> backprop_layer(size_t li, const ForwardCache<Real>& cache,
                              const Tensor<Real>& gout,
                              LayerParams<Real>& grad) const {
    const LayerSpec& spec = specs_[li];
    const Tensor<Real>& x = cache.inputs[li];
    switch (spec.kind) {
      case LayerKind::conv1d_over_time: {
        const int c_in = x.dims[1];
        const int t_out = gout.dims[0];
        Tensor<Real> gin(x.dims);
        const auto& w = params_[li].weights;
        for (int t = 0; t < t_out; ++t) {
          const int t0 = t * spec.stride;
          for (int f = 0; f < spec.filters; ++f) {
            const Real g = gout[static_cast<size_t>(t) * spec.filters + f];
            grad.bias[static_cast<size_t>(f)] += g;
            const size_t wbase = static_cast<size_t>(f) * c_in * spec.kernel_width;
            for (int k = 0; k < spec.kernel_width; ++k) {
              const size_t xbase = static_cast<size_t>(t0 + k) * c_in;
              for (int c = 0; c < c_in; ++c) {
                const size_t wi = wbase + static_cast<size_t>(c) * spec.kernel_width + k;
                grad.weights[wi] += g * x[xbase + c];
                gin[xbase + c] += g * w[wi];
              }
            }
          }
        }
        return gin;
      }
      case LayerKind::maxpool: {
        Tensor<Real> gin(x.dims);
        const int c = x.dims[1];
        const auto& arg = cache.argmax[li];
        const int t_out = gout.dims[0];
        for (int t = 0; t < t_out; ++t) {
          for (int ch = 0; ch < c; ++ch) {
            const int src = arg[static_cast<size_t>(t) * c + ch];
            gin[static_cast<size_t>(src) * c + ch] +=
                gout[static_cast<size_t>(t) * c + ch];
          }
        }
        return gin;
      }
      case LayerKind::dense: {
        const int n = x.dims[0];
        Tensor<Real> gin(x.dims);
        const auto& w = params_[li].weights;
        for (int u = 0; u < spec.units; ++u) {
          const Real g = gout[static_cast<size_t>(u)];
          grad.bias[static_cast<size_t>(u)] += g;
          const size_t base = static_cast<size_t>(u) * n;
          for (int i = 0; i < n; ++i) {
            grad.weights[base + i] += g * x[static_cast<size_t>(i)];
            gin[static_cast<size_t>(i)] += g * w[base + i];
          }
        }
        return gin;
      }
      case LayerKind::relu: {
        Tensor<Real> gin = gout;
        for (size_t i = 0; i < gin.size(); ++i)
          if (x[i] <= Real(0)) gin[i] = Real(0);
        return gin;
      }
      case LayerKind::sigmoid: {
        Tensor<Real> gin = gout;
        const auto& y = cache.sigmoid_output[li];
        for (size_t i = 0; i < gin.size(); ++i)
          gin[i] *= y[i] * (Real(1) - y[i]);
        return gin;
      }
      case LayerKind::dropout: {
        if (cache.mode == Mode::infer || spec.rate == 0.0) return gout;
        Tensor<Real> gin = gout;
        const auto& mask = cache.masks[li];
        for (size_t i = 0; i < gin.size(); ++i) gin[i] *= mask[i];
        return gin;
      }
      case LayerKind::gaussian_noise: {
        return gout;  // additive noise: identity gradient
      }
      case LayerKind::flatten: {
        Tensor<Real> gin = gout;
        gin.dims = x.dims;
        return gin;
      }
    }
    throw InvalidConfig("unknown layer kind");
  }

  std::vector<int> input_dims_;
  std::vector<LayerSpec> specs_;
  std::vector<LayerParams<Real>> params_;
  std::vector<std::vector<int>> output_shapes_;
  uint64_t revision_ = 0;
};

}  // namespace kws::nn
