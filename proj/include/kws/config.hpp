// kws/config.hpp

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

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>

#include "kws/common.hpp"
#include "kws/dtw.hpp"
#include "kws/io.hpp"
#include "kws/mfcc.hpp"
#include "kws/rng.hpp"
#include "kws/sae.hpp"
#include "kws/spotter.hpp"
#include "kws/synthetic.hpp"

namespace kws {

// One experiment = one JSON object with a flat, dotted key set.  Every key
// has a default, so an empty object is a valid config; command-line
// --set key=value overrides beat file values.  The resolved config is
// copied into every output directory for provenance.
struct RunConfig {
  uint64_t seed = 0;
  int workers = 1;
  std::string feature_kind = "mfcc39";  // mfcc39 | sae39 | imported
  SyntheticSpec synth;
  MfccConfig mfcc;
  DtwConfig dtw;
  SaeConfig sae;
  ClassifierConfig classifier;
  DistillConfig distill;

  // Named substreams of the global seed keep pipeline stages independently
  // reproducible.
  uint64_t substream_seed(std::string_view name) const {
    return Rng(seed).substream(name).seed();
  }
};

namespace detail {

template <typename T>
void get_key(const nlohmann::json& j, const char* key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_same_v<T, std::optional<int>>) {
      out = it->is_null() ? std::optional<int>{} : std::optional<int>{it->get<int>()};
    } else if constexpr (std::is_same_v<T, std::optional<double>>) {
      out = it->is_null() ? std::optional<double>{} : std::optional<double>{it->get<double>()};
    } else {
      out = it->get<T>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad value for config key '" + std::string(key) + "': " + e.what());
  }
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  static const std::set<std::string> known = {
      "seed", "workers", "feature_kind",
      "synth.num_keywords", "synth.exemplars_per_keyword",
      "synth.num_train_utterances", "synth.num_dev_utterances",
      "synth.num_test_utterances", "synth.utterance_min_frames",
      "synth.utterance_max_frames", "synth.keyword_min_frames",
      "synth.keyword_max_frames", "synth.keyword_occurrence_probability",
      "synth.warp_min", "synth.warp_max", "synth.noise_sigma", "synth.feature_dim",
      "mfcc.sample_rate", "mfcc.frame_length_ms", "mfcc.frame_shift_ms",
      "mfcc.num_mel_filters", "mfcc.num_cepstra", "mfcc.low_freq", "mfcc.high_freq",
      "mfcc.preemphasis", "mfcc.delta_window", "mfcc.log_floor", "mfcc.mean_subtract",
      "dtw.window_skip", "dtw.length_factor_min", "dtw.length_factor_max",
      "dtw.length_grid", "dtw.band_width",
      "sae.layer_dims", "sae.extract_layer", "sae.noise_sigma",
      "sae.pretrain_epochs", "sae.finetune_epochs", "sae.learning_rate",
      "sae.batch_size",
      "classifier.window_frames", "classifier.conv_filters", "classifier.conv_kernel",
      "classifier.pool_size", "classifier.dense_units", "classifier.dropout_rate",
      "classifier.negatives_per_positive", "classifier.epochs",
      "classifier.batch_size", "classifier.learning_rate", "classifier.eval_stride",
      "distill.input_frames", "distill.conv_filters", "distill.conv_kernel",
      "distill.pool_every", "distill.pool_size", "distill.dense_units",
      "distill.dropout_rate", "distill.gaussian_sigma", "distill.epochs",
      "distill.batch_size", "distill.lr_start", "distill.lr_end",
  };
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }

  RunConfig c;
  using detail::get_key;
  get_key(j, "seed", c.seed);
  get_key(j, "workers", c.workers);
  get_key(j, "feature_kind", c.feature_kind);

  get_key(j, "synth.num_keywords", c.synth.num_keywords);
  get_key(j, "synth.exemplars_per_keyword", c.synth.exemplars_per_keyword);
  get_key(j, "synth.num_train_utterances", c.synth.num_train_utterances);
  get_key(j, "synth.num_dev_utterances", c.synth.num_dev_utterances);
  get_key(j, "synth.num_test_utterances", c.synth.num_test_utterances);
  get_key(j, "synth.utterance_min_frames", c.synth.utterance_min_frames);
  get_key(j, "synth.utterance_max_frames", c.synth.utterance_max_frames);
  get_key(j, "synth.keyword_min_frames", c.synth.keyword_min_frames);
  get_key(j, "synth.keyword_max_frames", c.synth.keyword_max_frames);
  get_key(j, "synth.keyword_occurrence_probability",
          c.synth.keyword_occurrence_probability);
  get_key(j, "synth.warp_min", c.synth.warp_min);
  get_key(j, "synth.warp_max", c.synth.warp_max);
  get_key(j, "synth.noise_sigma", c.synth.noise_sigma);
  get_key(j, "synth.feature_dim", c.synth.feature_dim);

  get_key(j, "mfcc.sample_rate", c.mfcc.sample_rate);
  get_key(j, "mfcc.frame_length_ms", c.mfcc.frame_length_ms);
  get_key(j, "mfcc.frame_shift_ms", c.mfcc.frame_shift_ms);
  get_key(j, "mfcc.num_mel_filters", c.mfcc.num_mel_filters);
  get_key(j, "mfcc.num_cepstra", c.mfcc.num_cepstra);
  get_key(j, "mfcc.low_freq", c.mfcc.low_freq);
  get_key(j, "mfcc.high_freq", c.mfcc.high_freq);
  get_key(j, "mfcc.preemphasis", c.mfcc.preemphasis);
  get_key(j, "mfcc.delta_window", c.mfcc.delta_window);
  get_key(j, "mfcc.log_floor", c.mfcc.log_floor);
  get_key(j, "mfcc.mean_subtract", c.mfcc.mean_subtract);

  get_key(j, "dtw.window_skip", c.dtw.window_skip);
  get_key(j, "dtw.length_factor_min", c.dtw.length_factor_min);
  get_key(j, "dtw.length_factor_max", c.dtw.length_factor_max);
  get_key(j, "dtw.length_grid", c.dtw.length_grid);
  get_key(j, "dtw.band_width", c.dtw.band_width);

  get_key(j, "sae.layer_dims", c.sae.layer_dims);
  get_key(j, "sae.extract_layer", c.sae.extract_layer);
  get_key(j, "sae.noise_sigma", c.sae.noise_sigma);
  get_key(j, "sae.pretrain_epochs", c.sae.pretrain_epochs);
  get_key(j, "sae.finetune_epochs", c.sae.finetune_epochs);
  get_key(j, "sae.learning_rate", c.sae.learning_rate);
  get_key(j, "sae.batch_size", c.sae.batch_size);

  get_key(j, "classifier.window_frames", c.classifier.window_frames);
  get_key(j, "classifier.conv_filters", c.classifier.conv_filters);
  get_key(j, "classifier.conv_kernel", c.classifier.conv_kernel);
  get_key(j, "classifier.pool_size", c.classifier.pool_size);
  get_key(j, "classifier.dense_units", c.classifier.dense_units);
  get_key(j, "classifier.dropout_rate", c.classifier.dropout_rate);
  get_key(j, "classifier.negatives_per_positive", c.classifier.negatives_per_positive);
  get_key(j, "classifier.epochs", c.classifier.epochs);
  get_key(j, "classifier.batch_size", c.classifier.batch_size);
  get_key(j, "classifier.learning_rate", c.classifier.learning_rate);
  get_key(j, "classifier.eval_stride", c.classifier.eval_stride);

  get_key(j, "distill.input_frames", c.distill.input_frames);
  get_key(j, "distill.conv_filters", c.distill.conv_filters);
  get_key(j, "distill.conv_kernel", c.distill.conv_kernel);
  get_key(j, "distill.pool_every", c.distill.pool_every);
  get_key(j, "distill.pool_size", c.distill.pool_size);
  get_key(j, "distill.dense_units", c.distill.dense_units);
  get_key(j, "distill.dropout_rate", c.distill.dropout_rate);
  get_key(j, "distill.gaussian_sigma", c.distill.gaussian_sigma);
  get_key(j, "distill.epochs", c.distill.epochs);
  get_key(j, "distill.batch_size", c.distill.batch_size);
  get_key(j, "distill.lr_start", c.distill.lr_start);
  get_key(j, "distill.lr_end", c.distill.lr_end);

  if (c.workers < 1) throw ConfigError("workers must be >= 1");
  if (c.feature_kind != "mfcc39" && c.feature_kind != "sae39" &&
      c.feature_kind != "imported")
    throw ConfigError("feature_kind must be one of mfcc39|sae39|imported");
  return c;
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["feature_kind"] = c.feature_kind;

  j["synth.num_keywords"] = c.synth.num_keywords;
  j["synth.exemplars_per_keyword"] = c.synth.exemplars_per_keyword;
  j["synth.num_train_utterances"] = c.synth.num_train_utterances;
  j["synth.num_dev_utterances"] = c.synth.num_dev_utterances;
  j["synth.num_test_utterances"] = c.synth.num_test_utterances;
  j["synth.utterance_min_frames"] = c.synth.utterance_min_frames;
  j["synth.utterance_max_frames"] = c.synth.utterance_max_frames;
  j["synth.keyword_min_frames"] = c.synth.keyword_min_frames;
  j["synth.keyword_max_frames"] = c.synth.keyword_max_frames;
  j["synth.keyword_occurrence_probability"] = c.synth.keyword_occurrence_probability;
  j["synth.warp_min"] = c.synth.warp_min;
  j["synth.warp_max"] = c.synth.warp_max;
  j["synth.noise_sigma"] = c.synth.noise_sigma;
  j["synth.feature_dim"] = c.synth.feature_dim;

  j["mfcc.sample_rate"] = c.mfcc.sample_rate;
  j["mfcc.frame_length_ms"] = c.mfcc.frame_length_ms;
  j["mfcc.frame_shift_ms"] = c.mfcc.frame_shift_ms;
  j["mfcc.num_mel_filters"] = c.mfcc.num_mel_filters;
  j["mfcc.num_cepstra"] = c.mfcc.num_cepstra;
  j["mfcc.low_freq"] = c.mfcc.low_freq;
  j["mfcc.high_freq"] = c.mfcc.high_freq;
  j["mfcc.preemphasis"] = c.mfcc.preemphasis;
  j["mfcc.delta_window"] = c.mfcc.delta_window;
  j["mfcc.log_floor"] = c.mfcc.log_floor;
  j["mfcc.mean_subtract"] = c.mfcc.mean_subtract;

  j["dtw.window_skip"] = c.dtw.window_skip;
  j["dtw.length_factor_min"] = c.dtw.length_factor_min;
  j["dtw.length_factor_max"] = c.dtw.length_factor_max;
  j["dtw.length_grid"] = c.dtw.length_grid;
  if (c.dtw.band_width) j["dtw.band_width"] = *c.dtw.band_width;
  else j["dtw.band_width"] = nullptr;

  j["sae.layer_dims"] = c.sae.layer_dims;
  j["sae.extract_layer"] = c.sae.extract_layer;
  j["sae.noise_sigma"] = c.sae.noise_sigma;
  j["sae.pretrain_epochs"] = c.sae.pretrain_epochs;
  j["sae.finetune_epochs"] = c.sae.finetune_epochs;
  j["sae.learning_rate"] = c.sae.learning_rate;
  j["sae.batch_size"] = c.sae.batch_size;

  j["classifier.window_frames"] = c.classifier.window_frames;
  j["classifier.conv_filters"] = c.classifier.conv_filters;
  j["classifier.conv_kernel"] = c.classifier.conv_kernel;
  j["classifier.pool_size"] = c.classifier.pool_size;
  j["classifier.dense_units"] = c.classifier.dense_units;
  j["classifier.dropout_rate"] = c.classifier.dropout_rate;
  j["classifier.negatives_per_positive"] = c.classifier.negatives_per_positive;
  j["classifier.epochs"] = c.classifier.epochs;
  j["classifier.batch_size"] = c.classifier.batch_size;
  j["classifier.learning_rate"] = c.classifier.learning_rate;
  j["classifier.eval_stride"] = c.classifier.eval_stride;

  j["distill.input_frames"] = c.distill.input_frames;
  j["distill.conv_filters"] = c.distill.conv_filters;
  j["distill.conv_kernel"] = c.distill.conv_kernel;
  j["distill.pool_every"] = c.distill.pool_every;
  j["distill.pool_size"] = c.distill.pool_size;
  j["distill.dense_units"] = c.distill.dense_units;
  j["distill.dropout_rate"] = c.distill.dropout_rate;
  if (c.distill.gaussian_sigma) j["distill.gaussian_sigma"] = *c.distill.gaussian_sigma;
  else j["distill.gaussian_sigma"] = nullptr;
  j["distill.epochs"] = c.distill.epochs;
  j["distill.batch_size"] = c.distill.batch_size;
  j["distill.lr_start"] = c.distill.lr_start;
  j["distill.lr_end"] = c.distill.lr_end;
  return j;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse config JSON: " + std::string(e.what()));
  }
  return config_from_json(j);
}

// Applies one "key=value" override on top of the JSON form.
inline void apply_override(nlohmann::json& j, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like key=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  try {
    j[key] = nlohmann::json::parse(value);
  } catch (const nlohmann::json::exception&) {
    j[key] = value;  // bare strings are allowed unquoted
  }
}

// Digest of the canonical (sorted-key) JSON dump.
inline uint64_t config_digest(const RunConfig& c) {
  const std::string dump = config_to_json(c).dump();
  return fnv1a64_bytes(dump.data(), dump.size());
}

}  // namespace kws
