// kws/sae.hpp

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
#include <filesystem>
#include <vector>

#include "kws/feature_matrix.hpp"
#include "kws/io.hpp"
#include "kws/nn/adam.hpp"
#include "kws/nn/tensor.hpp"
#include "kws/rng.hpp"

namespace kws {

// Stacked denoising autoencoder feature learner.  Each hidden layer is a
// tanh dense layer trained greedily to reconstruct the previous layer's
// clean activations from a Gaussian-corrupted copy, through a throwaway
// linear decoder.  The stack plus a linear reconstruction head is then
// fine-tuned end to end.  Noise exists only at training time; encoding is
// a clean forward pass through the first extract_layer layers.
struct SaeConfig {
  std::vector<int> layer_dims = {500, 250, 100, 39, 100, 250, 500};
  int extract_layer = 4;  // 1-indexed; the default 39-wide fourth layer
  double noise_sigma = 0.1;
  int pretrain_epochs = 5;
  int finetune_epochs = 5;
  double learning_rate = 1e-3;
  int batch_size = 64;
  uint64_t seed = 0;

  void validate() const {
    if (layer_dims.empty()) throw InvalidConfig("sae: layer_dims is empty");
    for (int d : layer_dims)
      if (d < 1) throw InvalidConfig("sae: layer widths must be positive");
    if (extract_layer < 1 || extract_layer > static_cast<int>(layer_dims.size()))
      throw InvalidConfig("sae: extract_layer out of range");
    if (noise_sigma < 0.0) throw InvalidConfig("sae: noise_sigma must be >= 0");
    if (pretrain_epochs < 0 || finetune_epochs < 0)
      throw InvalidConfig("sae: epoch counts must be >= 0");
    if (batch_size < 1) throw InvalidConfig("sae: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw InvalidConfig("sae: learning_rate must be > 0");
  }
};

struct SaeModel {
  SaeConfig config;
  int input_dim = 0;
  std::vector<double> feat_mean;  // training-set standardization
  std::vector<double> feat_std;
  std::vector<nn::Tensor<double>> weights;  // hidden layer l: [width_l, width_{l-1}]
  std::vector<nn::Tensor<double>> biases;
  nn::Tensor<double> head_weights;  // linear reconstruction [D, width_last]
  nn::Tensor<double> head_bias;
};

namespace detail {

inline void sae_init_dense(nn::Tensor<double>& w, int out_dim, int in_dim, Rng& rng) {
  w = nn::Tensor<double>({out_dim, in_dim});
  const double bound = std::sqrt(6.0 / (in_dim + out_dim));
  for (auto& v : w.data) v = rng.uniform(-bound, bound);
}

// h = tanh(W x + b)
inline std::vector<double> sae_dense_tanh(const nn::Tensor<double>& w,
                                          const nn::Tensor<double>& b,
                                          const std::vector<double>& x) {
  const int out_dim = w.dims[0], in_dim = w.dims[1];
  std::vector<double> h(static_cast<size_t>(out_dim));
  for (int o = 0; o < out_dim; ++o) {
    double acc = b[static_cast<size_t>(o)];
    const size_t base = static_cast<size_t>(o) * in_dim;
    for (int i = 0; i < in_dim; ++i) acc += w[base + i] * x[static_cast<size_t>(i)];
    h[static_cast<size_t>(o)] = std::tanh(acc);
  }
  return h;
}

inline std::vector<double> sae_dense_linear(const nn::Tensor<double>& w,
                                            const nn::Tensor<double>& b,
                                            const std::vector<double>& x) {
  const int out_dim = w.dims[0], in_dim = w.dims[1];
  std::vector<double> y(static_cast<size_t>(out_dim));
  for (int o = 0; o < out_dim; ++o) {
    double acc = b[static_cast<size_t>(o)];
    const size_t base = static_cast<size_t>(o) * in_dim;
    for (int i = 0; i < in_dim; ++i) acc += w[base + i] * x[static_cast<size_t>(i)];
    y[static_cast<size_t>(o)] = acc;
  }
  return y;
}

inline std::vector<size_t> shuffled_indices(size_t n, Rng& rng) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  for (size_t i = n; i > 1; --i) {
    const size_t j = rng.below(i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace detail

// Mean reconstruction MSE of the stack (clean pass) over the given rows,
// measured in standardized space.
inline double sae_reconstruction_mse(const SaeModel& model,
                                     const std::vector<std::vector<double>>& rows) {
  double total = 0.0;
  size_t count = 0;
  for (const auto& x : rows) {
    std::vector<double> h = x;
    for (size_t l = 0; l < model.weights.size(); ++l)
      h = detail::sae_dense_tanh(model.weights[l], model.biases[l], h);
    const std::vector<double> r =
        detail::sae_dense_linear(model.head_weights, model.head_bias, h);
    for (size_t d = 0; d < x.size(); ++d) {
      const double e = r[d] - x[d];
      total += e * e;
    }
    count += x.size();
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

// Trains on every frame of every record in the map.  Deterministic for a
// given config: all randomness comes from seed substreams.
inline SaeModel train_sae(const FeatureMap& features, const SaeConfig& cfg) {
  cfg.validate();

  // gather frames
  size_t total_frames = 0;
  int dim = -1;
  for (const auto& [id, m] : features) {
    if (dim < 0) dim = m.dim;
    if (m.dim != dim) throw DimMismatch("sae: records disagree on feature dim");
    total_frames += static_cast<size_t>(m.num_frames);
  }
  if (total_frames == 0) throw EmptyInput("sae: no training frames");

  std::vector<std::vector<double>> frames;
  frames.reserve(total_frames);
  for (const auto& [id, m] : features) {
    for (int t = 0; t < m.num_frames; ++t) {
      const auto row = m.row(t);
      frames.emplace_back(row.begin(), row.end());
    }
  }

  SaeModel model;
  model.config = cfg;
  model.input_dim = dim;

  // standardization
  model.feat_mean.assign(static_cast<size_t>(dim), 0.0);
  model.feat_std.assign(static_cast<size_t>(dim), 0.0);
  for (const auto& f : frames)
    for (int d = 0; d < dim; ++d) model.feat_mean[static_cast<size_t>(d)] += f[static_cast<size_t>(d)];
  for (auto& v : model.feat_mean) v /= static_cast<double>(frames.size());
  for (const auto& f : frames)
    for (int d = 0; d < dim; ++d) {
      const double e = f[static_cast<size_t>(d)] - model.feat_mean[static_cast<size_t>(d)];
      model.feat_std[static_cast<size_t>(d)] += e * e;
    }
  for (auto& v : model.feat_std) {
    v = std::sqrt(v / static_cast<double>(frames.size()));
    if (v == 0.0) v = 1.0;
  }
  for (auto& f : frames)
    for (int d = 0; d < dim; ++d)
      f[static_cast<size_t>(d)] = (f[static_cast<size_t>(d)] - model.feat_mean[static_cast<size_t>(d)]) /
                                  model.feat_std[static_cast<size_t>(d)];

  Rng root(cfg.seed);
  Rng init_rng = root.substream("sae-init");
  Rng noise_rng = root.substream("sae-noise");
  Rng shuffle_rng = root.substream("sae-shuffle");

  const auto num_layers = cfg.layer_dims.size();
  model.weights.resize(num_layers);
  model.biases.resize(num_layers);
  int prev_width = dim;
  for (size_t l = 0; l < num_layers; ++l) {
    detail::sae_init_dense(model.weights[l], cfg.layer_dims[l], prev_width, init_rng);
    model.biases[l] = nn::Tensor<double>({cfg.layer_dims[l]});
    prev_width = cfg.layer_dims[l];
  }
  detail::sae_init_dense(model.head_weights, dim, prev_width, init_rng);
  model.head_bias = nn::Tensor<double>({dim});

  // --- greedy layer-wise pretraining ---
  std::vector<std::vector<double>> h = frames;  // clean activations feeding layer l
  for (size_t l = 0; l < num_layers; ++l) {
    const int in_dim = l == 0 ? dim : cfg.layer_dims[l - 1];
    const int out_dim = cfg.layer_dims[l];

    // throwaway linear decoder for this layer
    nn::Tensor<double> dec_w;
    detail::sae_init_dense(dec_w, in_dim, out_dim, init_rng);
    nn::Tensor<double> dec_b({in_dim});

    nn::AdamState<double> opt;
    opt.lr_start = opt.lr_end = cfg.learning_rate;
    std::vector<nn::LayerParams<double>> params(2);
    params[0].weights = std::move(model.weights[l]);
    params[0].bias = std::move(model.biases[l]);
    params[1].weights = std::move(dec_w);
    params[1].bias = std::move(dec_b);

    for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
      const auto order = detail::shuffled_indices(h.size(), shuffle_rng);
      for (size_t start = 0; start < order.size();
           start += static_cast<size_t>(cfg.batch_size)) {
        const size_t end =
            std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
        std::vector<nn::LayerParams<double>> grads(2);
        grads[0].weights = nn::Tensor<double>(params[0].weights.dims);
        grads[0].bias = nn::Tensor<double>(params[0].bias.dims);
        grads[1].weights = nn::Tensor<double>(params[1].weights.dims);
        grads[1].bias = nn::Tensor<double>(params[1].bias.dims);
        const double inv_count =
            1.0 / (static_cast<double>(end - start) * static_cast<double>(in_dim));
        for (size_t bi = start; bi < end; ++bi) {
          const std::vector<double>& clean = h[order[bi]];
          std::vector<double> noisy = clean;
          if (cfg.noise_sigma > 0.0)
            for (auto& v : noisy) v += noise_rng.gaussian() * cfg.noise_sigma;
          const auto hid = detail::sae_dense_tanh(params[0].weights, params[0].bias, noisy);
          const auto recon = detail::sae_dense_linear(params[1].weights, params[1].bias, hid);
          // d(mse)/d(recon)
          std::vector<double> d_recon(static_cast<size_t>(in_dim));
          for (int d = 0; d < in_dim; ++d)
            d_recon[static_cast<size_t>(d)] =
                2.0 * (recon[static_cast<size_t>(d)] - clean[static_cast<size_t>(d)]) * inv_count;
          // decoder grads and d(hidden)
          std::vector<double> d_hid(static_cast<size_t>(out_dim), 0.0);
          for (int d = 0; d < in_dim; ++d) {
            const double g = d_recon[static_cast<size_t>(d)];
            grads[1].bias[static_cast<size_t>(d)] += g;
            const size_t base = static_cast<size_t>(d) * out_dim;
            for (int o = 0; o < out_dim; ++o) {
              grads[1].weights[base + o] += g * hid[static_cast<size_t>(o)];
              d_hid[static_cast<size_t>(o)] += g * params[1].weights[base + o];
            }
          }
          // through tanh into encoder grads
          for (int o = 0; o < out_dim; ++o) {
            const double hv = hid[static_cast<size_t>(o)];
            const double g = d_hid[static_cast<size_t>(o)] * (1.0 - hv * hv);
            grads[0].bias[static_cast<size_t>(o)] += g;
            const size_t base = static_cast<size_t>(o) * in_dim;
            for (int i = 0; i < in_dim; ++i)
              grads[0].weights[base + i] += g * noisy[static_cast<size_t>(i)];
          }
        }
        adam_step(opt, params, grads);
      }
    }

    model.weights[l] = std::move(params[0].weights);
    model.biases[l] = std::move(params[0].bias);

    // clean activations for the next layer
    for (auto& row : h) row = detail::sae_dense_tanh(model.weights[l], model.biases[l], row);
  }

  // --- end-to-end fine-tuning of the stacked network ---
  if (cfg.finetune_epochs > 0) {
    nn::AdamState<double> opt;
    opt.lr_start = opt.lr_end = cfg.learning_rate;
    std::vector<nn::LayerParams<double>> params(num_layers + 1);
    for (size_t l = 0; l < num_layers; ++l) {
      params[l].weights = std::move(model.weights[l]);
      params[l].bias = std::move(model.biases[l]);
    }
    params[num_layers].weights = std::move(model.head_weights);
    params[num_layers].bias = std::move(model.head_bias);

    for (int epoch = 0; epoch < cfg.finetune_epochs; ++epoch) {
      const auto order = detail::shuffled_indices(frames.size(), shuffle_rng);
      for (size_t start = 0; start < order.size();
           start += static_cast<size_t>(cfg.batch_size)) {
        const size_t end =
            std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
        std::vector<nn::LayerParams<double>> grads(num_layers + 1);
        for (size_t l = 0; l <= num_layers; ++l) {
          grads[l].weights = nn::Tensor<double>(params[l].weights.dims);
          grads[l].bias = nn::Tensor<double>(params[l].bias.dims);
        }
        const double inv_count =
            1.0 / (static_cast<double>(end - start) * static_cast<double>(dim));
        for (size_t bi = start; bi < end; ++bi) {
          const std::vector<double>& clean = frames[order[bi]];
          std::vector<double> noisy = clean;
          if (cfg.noise_sigma > 0.0)
            for (auto& v : noisy) v += noise_rng.gaussian() * cfg.noise_sigma;
          // forward, keeping activations
          std::vector<std::vector<double>> acts(num_layers + 1);
          acts[0] = noisy;
          for (size_t l = 0; l < num_layers; ++l)
            acts[l + 1] = detail::sae_dense_tanh(params[l].weights, params[l].bias, acts[l]);
          const auto recon = detail::sae_dense_linear(params[num_layers].weights,
                                                      params[num_layers].bias,
                                                      acts[num_layers]);
          std::vector<double> d_out(static_cast<size_t>(dim));
          for (int d = 0; d < dim; ++d)
            d_out[static_cast<size_t>(d)] =
                2.0 * (recon[static_cast<size_t>(d)] - clean[static_cast<size_t>(d)]) * inv_count;
          // head
          {
            const int out_d = dim;
            const int in_d = params[num_layers].weights.dims[1];
            std::vector<double> d_in(static_cast<size_t>(in_d), 0.0);
            for (int o = 0; o < out_d; ++o) {
              const double g = d_out[static_cast<size_t>(o)];
              grads[num_layers].bias[static_cast<size_t>(o)] += g;
              const size_t base = static_cast<size_t>(o) * in_d;
              for (int i = 0; i < in_d; ++i) {
                grads[num_layers].weights[base + i] += g * acts[num_layers][static_cast<size_t>(i)];
                d_in[static_cast<size_t>(i)] += g * params[num_layers].weights[base + i];
              }
            }
            d_out = std::move(d_in);
          }
          // hidden layers, reversed
          for (size_t l = num_layers; l-- > 0;) {
            const int out_d = params[l].weights.dims[0];
            const int in_d = params[l].weights.dims[1];
            std::vector<double> d_in(static_cast<size_t>(in_d), 0.0);
            for (int o = 0; o < out_d; ++o) {
              const double hv = acts[l + 1][static_cast<size_t>(o)];
              const double g = d_out[static_cast<size_t>(o)] * (1.0 - hv * hv);
              grads[l].bias[static_cast<size_t>(o)] += g;
              const size_t base = static_cast<size_t>(o) * in_d;
              for (int i = 0; i < in_d; ++i) {
                grads[l].weights[base + i] += g * acts[l][static_cast<size_t>(i)];
                d_in[static_cast<size_t>(i)] += g * params[l].weights[base + i];
              }
            }
            d_out = std::move(d_in);
          }
        }
        adam_step(opt, params, grads);
      }
    }

    for (size_t l = 0; l < num_layers; ++l) {
      model.weights[l] = std::move(params[l].weights);
      model.biases[l] = std::move(params[l].bias);
    }
    model.head_weights = std::move(params[num_layers].weights);
    model.head_bias = std::move(params[num_layers].bias);
  }

  return model;
}

// Per-frame clean forward pass through layers 1..extract_layer.
inline FeatureMatrix sae_encode(const SaeModel& model, const FeatureMatrix& m) {
  if (m.dim != model.input_dim)
    throw DimMismatch("sae encode: input dim " + std::to_string(m.dim) +
                      " != model dim " + std::to_string(model.input_dim));
  const int out_dim = model.config.layer_dims[static_cast<size_t>(model.config.extract_layer) - 1];
  FeatureMatrix out(m.num_frames, out_dim, FeatureKind::sae39, m.frame_shift_ms);
  std::vector<double> x(static_cast<size_t>(m.dim));
  for (int t = 0; t < m.num_frames; ++t) {
    const auto row = m.row(t);
    for (int d = 0; d < m.dim; ++d)
      x[static_cast<size_t>(d)] =
          (row[static_cast<size_t>(d)] - model.feat_mean[static_cast<size_t>(d)]) /
          model.feat_std[static_cast<size_t>(d)];
    std::vector<double> h = x;
    for (int l = 0; l < model.config.extract_layer; ++l)
      h = detail::sae_dense_tanh(model.weights[static_cast<size_t>(l)],
                                 model.biases[static_cast<size_t>(l)], h);
    for (int d = 0; d < out_dim; ++d)
      out.at(t, d) = static_cast<float>(h[static_cast<size_t>(d)]);
  }
  return out;
}

// SAE1 checkpoint: config, standardization vectors, layer and head
// parameters, all little-endian f64.
inline void save_sae(const SaeModel& model, const std::filesystem::path& path) {
  std::ofstream os = open_output(path);
  os.write("SAE1", 4);
  write_u32le(os, static_cast<uint32_t>(model.config.layer_dims.size()));
  for (int d : model.config.layer_dims) write_u32le(os, static_cast<uint32_t>(d));
  write_u32le(os, static_cast<uint32_t>(model.config.extract_layer));
  write_f64le(os, model.config.noise_sigma);
  write_u32le(os, static_cast<uint32_t>(model.config.pretrain_epochs));
  write_u32le(os, static_cast<uint32_t>(model.config.finetune_epochs));
  write_f64le(os, model.config.learning_rate);
  write_u32le(os, static_cast<uint32_t>(model.config.batch_size));
  write_u64le(os, model.config.seed);
  write_u32le(os, static_cast<uint32_t>(model.input_dim));
  for (double v : model.feat_mean) write_f64le(os, v);
  for (double v : model.feat_std) write_f64le(os, v);
  auto write_tensor = [&](const nn::Tensor<double>& t) {
    write_u32le(os, static_cast<uint32_t>(t.dims.size()));
    for (int d : t.dims) write_u32le(os, static_cast<uint32_t>(d));
    for (double v : t.data) write_f64le(os, v);
  };
  for (size_t l = 0; l < model.weights.size(); ++l) {
    write_tensor(model.weights[l]);
    write_tensor(model.biases[l]);
  }
  write_tensor(model.head_weights);
  write_tensor(model.head_bias);
  if (!os) throw IoError("write failed: " + path.string());
}

inline SaeModel load_sae(const std::filesystem::path& path) {
  std::ifstream is = open_input(path);
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::string_view(magic, 4) != "SAE1")
    throw BadMagic("not an SAE1 checkpoint: " + path.string());
  SaeModel model;
  const uint32_t num_layers = read_u32le(is);
  model.config.layer_dims.resize(num_layers);
  for (auto& d : model.config.layer_dims) d = static_cast<int>(read_u32le(is));
  model.config.extract_layer = static_cast<int>(read_u32le(is));
  model.config.noise_sigma = read_f64le(is);
  model.config.pretrain_epochs = static_cast<int>(read_u32le(is));
  model.config.finetune_epochs = static_cast<int>(read_u32le(is));
  model.config.learning_rate = read_f64le(is);
  model.config.batch_size = static_cast<int>(read_u32le(is));
  model.config.seed = read_u64le(is);
  model.input_dim = static_cast<int>(read_u32le(is));
  model.feat_mean.resize(static_cast<size_t>(model.input_dim));
  for (auto& v : model.feat_mean) v = read_f64le(is);
  model.feat_std.resize(static_cast<size_t>(model.input_dim));
  for (auto& v : model.feat_std) v = read_f64le(is);
  auto read_tensor = [&]() {
    const uint32_t rank = read_u32le(is);
    std::vector<int> dims(rank);
    for (auto& d : dims) d = static_cast<int>(read_u32le(is));
    nn::Tensor<double> t(dims);
    for (auto& v : t.data) v = read_f64le(is);
    return t;
  };
  model.weights.resize(num_layers);
  model.biases.resize(num_layers);
  for (uint32_t l = 0; l < num_layers; ++l) {
    model.weights[l] = read_tensor();
    model.biases[l] = read_tensor();
  }
  model.head_weights = read_tensor();
  model.head_bias = read_tensor();
  return model;
}

}  // namespace kws
