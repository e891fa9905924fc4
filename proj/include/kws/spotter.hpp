// kws/spotter.hpp

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

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kws/dtw.hpp"
#include "kws/feature_matrix.hpp"
#include "kws/io.hpp"
#include "kws/manifest.hpp"
#include "kws/nn/adam.hpp"
#include "kws/nn/loss.hpp"
#include "kws/nn/network.hpp"
#include "kws/rng.hpp"

namespace kws {

// The model-based spotters.  The classifier is an (L+1)-way softmax CNN
// trained on isolated keyword windows plus randomly drawn negatives and
// applied with a sliding window at test time.  The distilled spotter is a
// CNN trained on whole utterances against DTW-derived soft targets; at test
// time it scores an utterance with a single forward pass, no alignment.

struct ClassifierConfig {
  int window_frames = 60;
  std::vector<int> conv_filters = {64, 128, 256};
  int conv_kernel = 5;
  int pool_size = 2;
  std::vector<int> dense_units = {500, 100, 300};
  double dropout_rate = 0.5;  // on the first and last dense layer
  double negatives_per_positive = 1.0;
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 1e-3;
  int eval_stride = 10;  // test-time window hop
  uint64_t seed = 0;

  void validate() const {
    if (window_frames < 1) throw InvalidConfig("classifier: window_frames must be >= 1");
    if (conv_filters.empty() || dense_units.empty())
      throw InvalidConfig("classifier: need conv and dense layers");
    for (int f : conv_filters)
      if (f < 1) throw InvalidConfig("classifier: filter counts must be positive");
    for (int u : dense_units)
      if (u < 1) throw InvalidConfig("classifier: dense widths must be positive");
    if (negatives_per_positive < 0.0)
      throw InvalidConfig("classifier: negatives_per_positive must be >= 0");
    if (epochs < 1 || batch_size < 1)
      throw InvalidConfig("classifier: epochs and batch_size must be >= 1");
    if (eval_stride < 1) throw InvalidConfig("classifier: eval_stride must be >= 1");
  }
};

struct DistillConfig {
  int input_frames = 1000;
  std::vector<int> conv_filters = {80, 128, 160, 192, 256, 256, 320, 384, 448, 512};
  int conv_kernel = 3;
  int pool_every = 2;  // maxpool(pool_size) after every pool_every-th conv
  int pool_size = 2;
  std::vector<int> dense_units = {3000, 3000};
  double dropout_rate = 0.5;
  std::optional<double> gaussian_sigma;  // set => train-time input noise
  int epochs = 10;
  int batch_size = 16;
  double lr_start = 1e-4;
  double lr_end = 1e-5;
  uint64_t seed = 0;

  void validate() const {
    if (input_frames < 1) throw InvalidConfig("distill: input_frames must be >= 1");
    if (conv_filters.empty() || dense_units.empty())
      throw InvalidConfig("distill: need conv and dense layers");
    for (int f : conv_filters)
      if (f < 1) throw InvalidConfig("distill: filter counts must be positive");
    for (int u : dense_units)
      if (u < 1) throw InvalidConfig("distill: dense widths must be positive");
    if (gaussian_sigma && *gaussian_sigma < 0.0)
      throw InvalidConfig("distill: gaussian sigma must be >= 0");
    if (epochs < 1 || batch_size < 1)
      throw InvalidConfig("distill: epochs and batch_size must be >= 1");
    if (pool_every < 1 || pool_size < 1)
      throw InvalidConfig("distill: pooling params must be >= 1");
  }

  // The reference architecture: ten conv layers between 80 and 512 filters
  // and two 3000-unit dense layers with 0.5 dropout, learning rate falling
  // linearly from 1e-4 to 1e-5.  Desk-scale runs shrink it through the
  // normal config surface.
  static DistillConfig reference_architecture() {
    DistillConfig cfg;
    for (int f : cfg.conv_filters)
      if (f < 80 || f > 512)
        throw InvalidConfig("distill: reference filters must lie in [80,512]");
    return cfg;
  }
};

template <typename Real>
struct SpotterModel {
  enum class Kind : uint8_t { classifier = 0, distilled = 1 };
  Kind kind = Kind::distilled;
  std::vector<std::string> keyword_ids;
  int feature_dim = 0;
  int input_frames = 0;  // classifier window or distill input length
  int eval_stride = 10;  // classifier only
  uint64_t seed = 0;
  uint64_t config_digest = 0;
  nn::Network<Real> net;
};

template <typename Real>
struct TrainResult {
  SpotterModel<Real> model;
  std::vector<double> epoch_losses;  // mean per-sample loss per epoch
};

namespace detail {

inline std::atomic<bool>& truncation_warned() {
  static std::atomic<bool> flag{false};
  return flag;
}

// Pad with zero frames at the end, or truncate, to exactly `frames` rows.
template <typename Real>
nn::Tensor<Real> features_to_input(const FeatureMatrix& m, int frames) {
  nn::Tensor<Real> x({frames, m.dim});
  if (m.num_frames > frames && !truncation_warned().exchange(true)) {
    std::cerr << "kws: utterance of " << m.num_frames
              << " frames truncated to model input length " << frames << "\n";
  }
  const int copy = std::min(frames, m.num_frames);
  for (int t = 0; t < copy; ++t) {
    const auto row = m.row(t);
    for (int d = 0; d < m.dim; ++d)
      x[static_cast<size_t>(t) * m.dim + d] = static_cast<Real>(row[static_cast<size_t>(d)]);
  }
  return x;
}

inline std::vector<nn::LayerSpec> classifier_layers(const ClassifierConfig& cfg,
                                                    int num_classes) {
  std::vector<nn::LayerSpec> layers;
  for (int f : cfg.conv_filters) {
    layers.push_back(nn::LayerSpec::conv1d(f, cfg.conv_kernel));
    layers.push_back(nn::LayerSpec::relu());
    layers.push_back(nn::LayerSpec::maxpool(cfg.pool_size));
  }
  layers.push_back(nn::LayerSpec::flatten());
  for (size_t i = 0; i < cfg.dense_units.size(); ++i) {
    layers.push_back(nn::LayerSpec::dense(cfg.dense_units[i]));
    layers.push_back(nn::LayerSpec::relu());
    if (i == 0 || i + 1 == cfg.dense_units.size())
      layers.push_back(nn::LayerSpec::dropout(cfg.dropout_rate));
  }
  layers.push_back(nn::LayerSpec::dense(num_classes));  // logits
  return layers;
}

inline std::vector<nn::LayerSpec> distill_layers(const DistillConfig& cfg,
                                                 int num_keywords) {
  std::vector<nn::LayerSpec> layers;
  if (cfg.gaussian_sigma)
    layers.push_back(nn::LayerSpec::gaussian_noise(*cfg.gaussian_sigma));
  for (size_t i = 0; i < cfg.conv_filters.size(); ++i) {
    layers.push_back(nn::LayerSpec::conv1d(cfg.conv_filters[i], cfg.conv_kernel));
    layers.push_back(nn::LayerSpec::relu());
    if ((i + 1) % static_cast<size_t>(cfg.pool_every) == 0)
      layers.push_back(nn::LayerSpec::maxpool(cfg.pool_size));
  }
  layers.push_back(nn::LayerSpec::flatten());
  for (int u : cfg.dense_units) {
    layers.push_back(nn::LayerSpec::dense(u));
    layers.push_back(nn::LayerSpec::relu());
    layers.push_back(nn::LayerSpec::dropout(cfg.dropout_rate));
  }
  layers.push_back(nn::LayerSpec::dense(num_keywords));
  layers.push_back(nn::LayerSpec::sigmoid());
  return layers;
}

}  // namespace detail

// End-to-end CNN classifier over fixed windows: positives are the padded
// keyword exemplars, negatives are windows drawn at random from the
// training utterances, and one extra softmax class stands for background.
template <typename Real = float>
TrainResult<Real> train_classifier(const KeywordSet& keywords,
                                   const FeatureMap& exemplar_feats,
                                   const FeatureMap& train_utterances,
                                   const ClassifierConfig& cfg) {
  cfg.validate();
  keywords.validate();
  const auto num_kw = keywords.keywords.size();

  int dim = -1;
  for (const auto& [id, m] : exemplar_feats) {
    dim = m.dim;
    break;
  }
  if (dim < 0) throw InsufficientData("classifier: no exemplar features");

  struct Sample {
    nn::Tensor<Real> input;
    int label;
  };
  std::vector<Sample> samples;
  for (size_t k = 0; k < num_kw; ++k) {
    const auto& ex_ids = keywords.exemplars.at(keywords.keywords[k]);
    if (ex_ids.empty())
      throw InsufficientData("classifier: keyword " + keywords.keywords[k] +
                             " has no exemplars");
    for (const auto& ex_id : ex_ids) {
      const auto it = exemplar_feats.find(ex_id);
      if (it == exemplar_feats.end())
        throw MissingInput("classifier: exemplar features missing for " + ex_id);
      samples.push_back({detail::features_to_input<Real>(it->second, cfg.window_frames),
                         static_cast<int>(k)});
    }
  }
  const size_t num_positives = samples.size();

  Rng root(cfg.seed);
  Rng neg_rng = root.substream("classifier-negatives");
  const auto num_negatives = static_cast<size_t>(
      std::llround(cfg.negatives_per_positive * static_cast<double>(num_positives)));
  if (num_negatives == 0)
    throw InsufficientData("classifier: background class would be empty");
  if (train_utterances.empty())
    throw InsufficientData("classifier: no training utterances to draw negatives from");

  std::vector<const FeatureMatrix*> utts;
  for (const auto& [id, m] : train_utterances) utts.push_back(&m);
  for (size_t i = 0; i < num_negatives; ++i) {
    const FeatureMatrix& u = *utts[neg_rng.below(utts.size())];
    const int max_start = std::max(0, u.num_frames - cfg.window_frames);
    const int start = static_cast<int>(neg_rng.range(0, max_start));
    FeatureMatrix window(std::min(cfg.window_frames, u.num_frames - start), u.dim,
                         u.kind, u.frame_shift_ms);
    for (int t = 0; t < window.num_frames; ++t)
      for (int d = 0; d < u.dim; ++d) window.at(t, d) = u.at(start + t, d);
    samples.push_back({detail::features_to_input<Real>(window, cfg.window_frames),
                       static_cast<int>(num_kw)});
  }

  Rng init_rng = root.substream("classifier-init");
  TrainResult<Real> result;
  result.model.kind = SpotterModel<Real>::Kind::classifier;
  result.model.keyword_ids = keywords.keywords;
  result.model.feature_dim = dim;
  result.model.input_frames = cfg.window_frames;
  result.model.eval_stride = cfg.eval_stride;
  result.model.seed = cfg.seed;
  result.model.net = nn::Network<Real>(
      {cfg.window_frames, dim},
      detail::classifier_layers(cfg, static_cast<int>(num_kw) + 1), init_rng);

  Rng shuffle_rng = root.substream("classifier-shuffle");
  Rng layer_rng = root.substream("classifier-layers");
  nn::AdamState<Real> opt;
  opt.lr_start = opt.lr_end = cfg.learning_rate;

  auto& net = result.model.net;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<size_t> order(samples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch_size)) {
      const size_t end =
          std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      std::vector<nn::LayerParams<Real>> batch_grads;
      for (size_t bi = start; bi < end; ++bi) {
        const Sample& s = samples[order[bi]];
        nn::ForwardCache<Real> cache;
        const auto logits = net.forward(s.input, nn::Mode::train, &layer_rng, &cache);
        nn::Tensor<Real> loss_grad;
        epoch_loss += nn::softmax_cross_entropy(logits, s.label, &loss_grad);
        auto grads = net.backward(cache, loss_grad);
        if (batch_grads.empty()) {
          batch_grads = std::move(grads);
        } else {
          for (size_t li = 0; li < grads.size(); ++li) {
            for (size_t i = 0; i < grads[li].weights.size(); ++i)
              batch_grads[li].weights[i] += grads[li].weights[i];
            for (size_t i = 0; i < grads[li].bias.size(); ++i)
              batch_grads[li].bias[i] += grads[li].bias[i];
          }
        }
      }
      const Real scale = static_cast<Real>(1.0 / static_cast<double>(end - start));
      for (auto& g : batch_grads) {
        for (auto& v : g.weights.data) v *= scale;
        for (auto& v : g.bias.data) v *= scale;
      }
      adam_step(opt, net.params(), batch_grads);
      net.bump_revision();
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(samples.size()));
  }
  return result;
}

// Slides the classifier window over the utterance; each keyword's score is
// its best (max) window posterior.  The background posterior is dropped.
template <typename Real>
std::vector<double> classify_utterance(const SpotterModel<Real>& model,
                                       const FeatureMatrix& utt) {
  if (model.kind != SpotterModel<Real>::Kind::classifier)
    throw InvalidConfig("classify_utterance: model is not a classifier");
  if (utt.dim != model.feature_dim)
    throw DimMismatch("classify_utterance: feature dim mismatch");

  std::vector<int> starts;
  if (utt.num_frames <= model.input_frames) {
    starts.push_back(0);
  } else {
    for (int s = 0; s + model.input_frames <= utt.num_frames; s += model.eval_stride)
      starts.push_back(s);
    const int tail = utt.num_frames - model.input_frames;
    if (starts.back() != tail) starts.push_back(tail);
  }

  const auto num_kw = model.keyword_ids.size();
  std::vector<double> scores(num_kw, 0.0);
  for (int s : starts) {
    FeatureMatrix window(std::min(model.input_frames, utt.num_frames - s), utt.dim,
                         utt.kind, utt.frame_shift_ms);
    for (int t = 0; t < window.num_frames; ++t)
      for (int d = 0; d < utt.dim; ++d) window.at(t, d) = utt.at(s + t, d);
    const auto input = detail::features_to_input<Real>(window, model.input_frames);
    const auto logits = model.net.forward(input, nn::Mode::infer, nullptr);
    const auto posterior = nn::softmax<Real>({logits.data.data(), logits.size()});
    for (size_t k = 0; k < num_kw; ++k)
      scores[k] = std::max(scores[k], static_cast<double>(posterior[k]));
  }
  return scores;
}

// Distills the DTW teacher into a CNN: whole utterances in, the soft target
// vector y out, summed cross-entropy against the L sigmoid outputs.
template <typename Real = float>
TrainResult<Real> train_cnn_dtw(const FeatureMap& train_utterances,
                                const ScoreMatrix& targets,
                                const DistillConfig& cfg) {
  cfg.validate();
  if (targets.lower_is_match)
    throw InvalidConfig("train_cnn_dtw: targets table must be higher-is-match; run make-targets first");
  const auto num_kw = targets.keyword_ids.size();
  if (num_kw == 0) throw InvalidConfig("train_cnn_dtw: target table has no keywords");

  std::map<std::string, size_t> target_row;
  for (size_t u = 0; u < targets.utterance_ids.size(); ++u)
    target_row[targets.utterance_ids[u]] = u;

  int dim = -1;
  struct Sample {
    nn::Tensor<Real> input;
    nn::Tensor<Real> target;
  };
  std::vector<Sample> samples;
  for (const auto& [id, m] : train_utterances) {
    if (dim < 0) dim = m.dim;
    const auto it = target_row.find(id);
    if (it == target_row.end())
      throw MissingTargets("train_cnn_dtw: no target vector for utterance " + id);
    Sample s;
    s.input = detail::features_to_input<Real>(m, cfg.input_frames);
    s.target = nn::Tensor<Real>({static_cast<int>(num_kw)});
    for (size_t k = 0; k < num_kw; ++k) {
      const double y = targets.at(it->second, k);
      if (!(y >= 0.0 && y <= 1.0))
        throw OutOfRange("train_cnn_dtw: target outside [0,1] for " + id);
      s.target[k] = static_cast<Real>(y);
    }
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw EmptyInput("train_cnn_dtw: no training utterances");

  Rng root(cfg.seed);
  Rng init_rng = root.substream("distill-init");
  TrainResult<Real> result;
  result.model.kind = SpotterModel<Real>::Kind::distilled;
  result.model.keyword_ids = targets.keyword_ids;
  result.model.feature_dim = dim;
  result.model.input_frames = cfg.input_frames;
  result.model.seed = cfg.seed;
  result.model.net =
      nn::Network<Real>({cfg.input_frames, dim},
                        detail::distill_layers(cfg, static_cast<int>(num_kw)), init_rng);

  const auto batches_per_epoch =
      (samples.size() + static_cast<size_t>(cfg.batch_size) - 1) /
      static_cast<size_t>(cfg.batch_size);
  nn::AdamState<Real> opt;
  opt.lr_start = cfg.lr_start;
  opt.lr_end = cfg.lr_end;
  opt.total_steps = static_cast<int64_t>(batches_per_epoch) * cfg.epochs;

  Rng shuffle_rng = root.substream("distill-shuffle");
  Rng layer_rng = root.substream("distill-layers");
  auto& net = result.model.net;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<size_t> order(samples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch_size)) {
      const size_t end =
          std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      std::vector<nn::LayerParams<Real>> batch_grads;
      for (size_t bi = start; bi < end; ++bi) {
        const Sample& s = samples[order[bi]];
        nn::ForwardCache<Real> cache;
        const auto pred = net.forward(s.input, nn::Mode::train, &layer_rng, &cache);
        nn::Tensor<Real> loss_grad;
        epoch_loss += nn::summed_cross_entropy(pred, s.target, &loss_grad);
        auto grads = net.backward(cache, loss_grad);
        if (batch_grads.empty()) {
          batch_grads = std::move(grads);
        } else {
          for (size_t li = 0; li < grads.size(); ++li) {
            for (size_t i = 0; i < grads[li].weights.size(); ++i)
              batch_grads[li].weights[i] += grads[li].weights[i];
            for (size_t i = 0; i < grads[li].bias.size(); ++i)
              batch_grads[li].bias[i] += grads[li].bias[i];
          }
        }
      }
      const Real scale = static_cast<Real>(1.0 / static_cast<double>(end - start));
      for (auto& g : batch_grads) {
        for (auto& v : g.weights.data) v *= scale;
        for (auto& v : g.bias.data) v *= scale;
      }
      adam_step(opt, net.params(), batch_grads);
      net.bump_revision();
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(samples.size()));
  }
  return result;
}

// Single forward pass; scores are the L sigmoid outputs in (0,1).
template <typename Real>
std::vector<double> spot(const SpotterModel<Real>& model, const FeatureMatrix& utt) {
  if (model.kind != SpotterModel<Real>::Kind::distilled)
    throw InvalidConfig("spot: model is not a distilled spotter");
  if (utt.dim != model.feature_dim)
    throw DimMismatch("spot: feature dim mismatch");
  const auto input = detail::features_to_input<Real>(utt, model.input_frames);
  const auto out = model.net.forward(input, nn::Mode::infer, nullptr);
  return std::vector<double>(out.data.begin(), out.data.end());
}

// Scores a whole archive into a higher-is-match table, dispatching on the
// model kind.  Rows are independent, so they can be spread over workers.
template <typename Real>
ScoreMatrix score_archive(const SpotterModel<Real>& model, const FeatureMap& utts,
                          int workers = 1) {
  ScoreMatrix sm;
  sm.keyword_ids = model.keyword_ids;
  sm.lower_is_match = false;
  std::vector<const FeatureMatrix*> rows;
  for (const auto& [id, m] : utts) {
    sm.utterance_ids.push_back(id);
    rows.push_back(&m);
  }
  const size_t num_kw = model.keyword_ids.size();
  sm.values.assign(rows.size() * num_kw, 0.0);
  parallel_for(rows.size(), workers, [&](size_t u) {
    const auto scores = model.kind == SpotterModel<Real>::Kind::classifier
                            ? classify_utterance(model, *rows[u])
                            : spot(model, *rows[u]);
    std::copy(scores.begin(), scores.end(), sm.values.begin() + u * num_kw);
  });
  return sm;
}

// --- CNN1 checkpoint container ---

namespace detail {

template <typename Real>
void write_tensor(std::ostream& os, const nn::Tensor<Real>& t, bool as_f64) {
  write_u32le(os, static_cast<uint32_t>(t.dims.size()));
  for (int d : t.dims) write_u32le(os, static_cast<uint32_t>(d));
  // explicit element count: parameter-free layers carry empty tensors
  write_u64le(os, t.data.size());
  for (const Real v : t.data) {
    if (as_f64) {
      write_f64le(os, static_cast<double>(v));
    } else {
      write_f32le(os, static_cast<float>(v));
    }
  }
}

template <typename Real>
nn::Tensor<Real> read_tensor(std::istream& is, bool as_f64) {
  const uint32_t rank = read_u32le(is);
  std::vector<int> dims(rank);
  for (auto& d : dims) d = static_cast<int>(read_u32le(is));
  nn::Tensor<Real> t;
  t.dims = std::move(dims);
  const uint64_t count = read_u64le(is);
  t.data.resize(count);
  for (auto& v : t.data)
    v = as_f64 ? static_cast<Real>(read_f64le(is)) : static_cast<Real>(read_f32le(is));
  return t;
}

}  // namespace detail

template <typename Real>
void save_spotter(const SpotterModel<Real>& model, const std::filesystem::path& path) {
  std::ofstream os = open_output(path);
  os.write("CNN1", 4);
  write_u8(os, 1);  // container version
  write_u8(os, static_cast<uint8_t>(model.kind));
  const bool f64 = sizeof(Real) == 8;
  write_u8(os, f64 ? 1 : 0);
  write_u64le(os, model.seed);
  write_u64le(os, model.config_digest);
  write_u32le(os, static_cast<uint32_t>(model.keyword_ids.size()));
  for (const auto& kw : model.keyword_ids) write_string(os, kw);
  write_u32le(os, static_cast<uint32_t>(model.feature_dim));
  write_u32le(os, static_cast<uint32_t>(model.input_frames));
  write_u32le(os, static_cast<uint32_t>(model.eval_stride));

  const auto& specs = model.net.specs();
  write_u32le(os, static_cast<uint32_t>(specs.size()));
  for (const auto& s : specs) {
    write_u8(os, static_cast<uint8_t>(s.kind));
    write_u32le(os, static_cast<uint32_t>(s.filters));
    write_u32le(os, static_cast<uint32_t>(s.kernel_width));
    write_u32le(os, static_cast<uint32_t>(s.stride));
    write_u32le(os, static_cast<uint32_t>(s.pool_size));
    write_u32le(os, static_cast<uint32_t>(s.units));
    write_f64le(os, s.rate);
    write_f64le(os, s.sigma);
  }
  for (const auto& p : model.net.params()) {
    detail::write_tensor(os, p.weights, f64);
    detail::write_tensor(os, p.bias, f64);
  }
  if (!os) throw IoError("write failed: " + path.string());
}

template <typename Real = float>
SpotterModel<Real> load_spotter(const std::filesystem::path& path) {
  std::ifstream is = open_input(path);
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::string_view(magic, 4) != "CNN1")
    throw BadMagic("not a CNN1 checkpoint: " + path.string());
  const uint8_t version = read_u8(is);
  if (version != 1) throw IoError("unsupported CNN1 version");
  SpotterModel<Real> model;
  model.kind = static_cast<typename SpotterModel<Real>::Kind>(read_u8(is));
  const bool f64 = read_u8(is) != 0;
  model.seed = read_u64le(is);
  model.config_digest = read_u64le(is);
  const uint32_t num_kw = read_u32le(is);
  for (uint32_t i = 0; i < num_kw; ++i) model.keyword_ids.push_back(read_string(is));
  model.feature_dim = static_cast<int>(read_u32le(is));
  model.input_frames = static_cast<int>(read_u32le(is));
  model.eval_stride = static_cast<int>(read_u32le(is));

  const uint32_t num_specs = read_u32le(is);
  std::vector<nn::LayerSpec> specs(num_specs);
  for (auto& s : specs) {
    s.kind = static_cast<nn::LayerKind>(read_u8(is));
    s.filters = static_cast<int>(read_u32le(is));
    s.kernel_width = static_cast<int>(read_u32le(is));
    s.stride = static_cast<int>(read_u32le(is));
    s.pool_size = static_cast<int>(read_u32le(is));
    s.units = static_cast<int>(read_u32le(is));
    s.rate = read_f64le(is);
    s.sigma = read_f64le(is);
  }
  Rng dummy(0);
  model.net = nn::Network<Real>({model.input_frames, model.feature_dim}, specs, dummy);
  for (auto& p : model.net.params()) {
    auto weights = detail::read_tensor<Real>(is, f64);
    auto bias = detail::read_tensor<Real>(is, f64);
    if (weights.dims != p.weights.dims || bias.dims != p.bias.dims)
      throw IoError("checkpoint parameter shapes do not match layer specs");
    p.weights = std::move(weights);
    p.bias = std::move(bias);
  }
  return model;
}

}  // namespace kws
