// tests/spotter_test.cpp

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

#include "kws/spotter.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "kws/rng.hpp"

namespace {

using Model = kws::SpotterModel<float>;

// Two well-separated keyword classes: constant frames along fixed random
// directions plus small noise.  Nearest-centroid distinguishes them easily,
// which independently certifies that the set is separable.
struct ToyClassifierData {
  kws::KeywordSet keywords;
  kws::FeatureMap exemplars;
  kws::FeatureMap train_utterances;
  std::vector<std::pair<const kws::FeatureMatrix*, int>> labelled;  // window, class
};

ToyClassifierData make_toy_data(int exemplars_per_kw = 8, int dim = 6) {
  ToyClassifierData data;
  data.keywords.keywords = {"kw0", "kw1"};
  kws::Rng rng(100);
  std::vector<std::vector<float>> directions(2, std::vector<float>(static_cast<size_t>(dim)));
  for (auto& dir : directions)
    for (auto& v : dir) v = static_cast<float>(rng.gaussian() * 2.0);
  for (int k = 0; k < 2; ++k) {
    const std::string kw = "kw" + std::to_string(k);
    for (int e = 0; e < exemplars_per_kw; ++e) {
      const std::string ex_id = kw + "_ex" + std::to_string(e);
      kws::FeatureMatrix m(12, dim);
      for (int t = 0; t < 12; ++t)
        for (int d = 0; d < dim; ++d)
          m.at(t, d) = directions[static_cast<size_t>(k)][static_cast<size_t>(d)] +
                       static_cast<float>(rng.gaussian() * 0.15);
      data.exemplars.emplace(ex_id, std::move(m));
      data.keywords.exemplars[kw].push_back(ex_id);
    }
  }
  for (int u = 0; u < 4; ++u) {
    kws::FeatureMatrix m(40, dim);
    for (auto& v : m.data) v = static_cast<float>(rng.gaussian());
    data.train_utterances.emplace("train_" + std::to_string(u), std::move(m));
  }
  for (const auto& kw : data.keywords.keywords) {
    const int label = kw == "kw0" ? 0 : 1;
    for (const auto& ex : data.keywords.exemplars.at(kw))
      data.labelled.emplace_back(&data.exemplars.at(ex), label);
  }
  return data;
}

kws::ClassifierConfig toy_classifier_config() {
  kws::ClassifierConfig cfg;
  cfg.window_frames = 12;
  cfg.conv_filters = {8};
  cfg.conv_kernel = 3;
  cfg.pool_size = 2;
  cfg.dense_units = {16, 8};
  cfg.dropout_rate = 0.25;
  cfg.negatives_per_positive = 1.0;
  cfg.epochs = 30;
  cfg.batch_size = 8;
  cfg.learning_rate = 2e-3;
  cfg.eval_stride = 4;
  cfg.seed = 9;
  return cfg;
}

// Independent oracle: classify by the nearest class centroid (mean frame).
double nearest_centroid_accuracy(const ToyClassifierData& data) {
  const int dim = data.labelled.front().first->dim;
  std::vector<std::vector<double>> centroids(2, std::vector<double>(static_cast<size_t>(dim), 0.0));
  std::vector<int> counts(2, 0);
  for (const auto& [m, label] : data.labelled) {
    for (int t = 0; t < m->num_frames; ++t)
      for (int d = 0; d < dim; ++d)
        centroids[static_cast<size_t>(label)][static_cast<size_t>(d)] += m->at(t, d);
    counts[static_cast<size_t>(label)] += m->num_frames;
  }
  for (int k = 0; k < 2; ++k)
    for (auto& v : centroids[static_cast<size_t>(k)]) v /= counts[static_cast<size_t>(k)];
  size_t correct = 0;
  for (const auto& [m, label] : data.labelled) {
    std::vector<double> mean(static_cast<size_t>(dim), 0.0);
    for (int t = 0; t < m->num_frames; ++t)
      for (int d = 0; d < dim; ++d) mean[static_cast<size_t>(d)] += m->at(t, d);
    for (auto& v : mean) v /= m->num_frames;
    double best = 1e300;
    int best_k = -1;
    for (int k = 0; k < 2; ++k) {
      double dist = 0.0;
      for (int d = 0; d < dim; ++d) {
        const double e = mean[static_cast<size_t>(d)] - centroids[static_cast<size_t>(k)][static_cast<size_t>(d)];
        dist += e * e;
      }
      if (dist < best) {
        best = dist;
        best_k = k;
      }
    }
    correct += best_k == label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(data.labelled.size());
}

TEST(ClassifierTest, LearnsSeparableToySet) {
  const auto data = make_toy_data();
  EXPECT_GT(nearest_centroid_accuracy(data), 0.95);  // the set really is separable

  const auto result = kws::train_classifier<float>(data.keywords, data.exemplars,
                                                   data.train_utterances,
                                                   toy_classifier_config());
  size_t correct = 0;
  for (const auto& [m, label] : data.labelled) {
    const auto input = kws::detail::features_to_input<float>(*m, 12);
    const auto logits = result.model.net.forward(input, kws::nn::Mode::infer, nullptr);
    int argmax = 0;
    for (size_t i = 1; i < logits.size(); ++i)
      if (logits[i] > logits[static_cast<size_t>(argmax)]) argmax = static_cast<int>(i);
    correct += argmax == label ? 1 : 0;
  }
  const double accuracy =
      static_cast<double>(correct) / static_cast<double>(data.labelled.size());
  EXPECT_GT(accuracy, 0.95);
}

TEST(ClassifierTest, ZeroNegativesRejected) {
  const auto data = make_toy_data(2);
  auto cfg = toy_classifier_config();
  cfg.negatives_per_positive = 0.0;
  EXPECT_THROW(kws::train_classifier<float>(data.keywords, data.exemplars,
                                            data.train_utterances, cfg),
               kws::InsufficientData);
}

TEST(ClassifierTest, DeterministicCheckpoints) {
  const auto data = make_toy_data(3);
  auto cfg = toy_classifier_config();
  cfg.epochs = 3;
  const auto a = kws::train_classifier<float>(data.keywords, data.exemplars,
                                              data.train_utterances, cfg);
  const auto b = kws::train_classifier<float>(data.keywords, data.exemplars,
                                              data.train_utterances, cfg);
  ASSERT_EQ(a.model.net.params().size(), b.model.net.params().size());
  for (size_t li = 0; li < a.model.net.params().size(); ++li)
    EXPECT_EQ(a.model.net.params()[li].weights.data,
              b.model.net.params()[li].weights.data);
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
}

TEST(ClassifierTest, ShortUtteranceUsesSinglePaddedWindow) {
  const auto data = make_toy_data(3);
  auto cfg = toy_classifier_config();
  cfg.epochs = 2;
  const auto result = kws::train_classifier<float>(data.keywords, data.exemplars,
                                                   data.train_utterances, cfg);
  kws::Rng rng(7);
  kws::FeatureMatrix shorty(5, 6);
  for (auto& v : shorty.data) v = static_cast<float>(rng.gaussian());
  const auto scores = kws::classify_utterance(result.model, shorty);

  const auto input = kws::detail::features_to_input<float>(shorty, 12);
  const auto logits = result.model.net.forward(input, kws::nn::Mode::infer, nullptr);
  const auto posterior = kws::nn::softmax<float>({logits.data.data(), logits.size()});
  ASSERT_EQ(scores.size(), 2u);
  EXPECT_DOUBLE_EQ(scores[0], static_cast<double>(posterior[0]));
  EXPECT_DOUBLE_EQ(scores[1], static_cast<double>(posterior[1]));
}

TEST(ClassifierTest, AppendingAudioNeverLowersScores) {
  const auto data = make_toy_data(3);
  auto cfg = toy_classifier_config();
  cfg.epochs = 2;
  const auto result = kws::train_classifier<float>(data.keywords, data.exemplars,
                                                   data.train_utterances, cfg);
  kws::Rng rng(8);
  // base length aligned so the longer signal's window starts are a superset
  kws::FeatureMatrix base(12 + 3 * cfg.eval_stride, 6);
  for (auto& v : base.data) v = static_cast<float>(rng.gaussian());
  kws::FeatureMatrix longer(base.num_frames + 2 * cfg.eval_stride, 6);
  for (int t = 0; t < base.num_frames; ++t)
    for (int d = 0; d < 6; ++d) longer.at(t, d) = base.at(t, d);
  for (int t = base.num_frames; t < longer.num_frames; ++t)
    for (int d = 0; d < 6; ++d) longer.at(t, d) = static_cast<float>(rng.gaussian());

  const auto s_base = kws::classify_utterance(result.model, base);
  const auto s_longer = kws::classify_utterance(result.model, longer);
  for (size_t k = 0; k < s_base.size(); ++k)
    EXPECT_GE(s_longer[k], s_base[k] - 1e-12);
}

// --- distilled spotter ---

kws::DistillConfig tiny_distill_config() {
  kws::DistillConfig cfg;
  cfg.input_frames = 24;
  cfg.conv_filters = {8, 8};
  cfg.conv_kernel = 3;
  cfg.pool_every = 1;
  cfg.pool_size = 2;
  cfg.dense_units = {16};
  cfg.dropout_rate = 0.0;
  cfg.epochs = 200;
  cfg.batch_size = 4;
  cfg.lr_start = 5e-3;
  cfg.lr_end = 1e-3;
  cfg.seed = 77;
  return cfg;
}

struct TinyDistillData {
  kws::FeatureMap train;
  kws::ScoreMatrix targets;
};

TinyDistillData make_distill_data(int num_utts = 4, bool binary_targets = true) {
  TinyDistillData data;
  data.targets.keyword_ids = {"kw0", "kw1"};
  data.targets.lower_is_match = false;
  kws::Rng rng(55);
  std::vector<std::vector<float>> patterns(2, std::vector<float>(5));
  for (auto& p : patterns)
    for (auto& v : p) v = static_cast<float>(rng.gaussian() * 2.0);
  for (int u = 0; u < num_utts; ++u) {
    const std::string id = "u" + std::to_string(u);
    kws::FeatureMatrix m(20, 5);
    for (auto& v : m.data) v = static_cast<float>(rng.gaussian() * 0.3);
    const int which = u % 2;
    for (int t = 5; t < 12; ++t)
      for (int d = 0; d < 5; ++d)
        m.at(t, d) += patterns[static_cast<size_t>(which)][static_cast<size_t>(d)];
    data.train.emplace(id, std::move(m));
    data.targets.utterance_ids.push_back(id);
    if (binary_targets) {
      data.targets.values.push_back(which == 0 ? 1.0 : 0.0);
      data.targets.values.push_back(which == 1 ? 1.0 : 0.0);
    } else {
      data.targets.values.push_back(0.5);
      data.targets.values.push_back(0.5);
    }
  }
  return data;
}

TEST(DistillTest, LossDecreasesAndReachesCapacityBound) {
  const auto data = make_distill_data();
  const auto result = kws::train_cnn_dtw<float>(data.train, data.targets,
                                                tiny_distill_config());
  ASSERT_GE(result.epoch_losses.size(), 2u);
  EXPECT_LT(result.epoch_losses.back(), result.epoch_losses.front());
  // binary targets, tiny corpus, enough capacity: loss below 0.05 * L
  EXPECT_LT(result.epoch_losses.back(), 0.05 * 2);
}

TEST(DistillTest, ConstantHalfTargetsDriveOutputsToHalf) {
  const auto data = make_distill_data(4, /*binary_targets=*/false);
  auto cfg = tiny_distill_config();
  cfg.epochs = 60;
  const auto result = kws::train_cnn_dtw<float>(data.train, data.targets, cfg);
  for (const auto& [id, m] : data.train) {
    const auto scores = kws::spot(result.model, m);
    for (double s : scores) EXPECT_NEAR(s, 0.5, 0.1);
  }
}

TEST(DistillTest, GaussianSigmaZeroMatchesNoNoiseLayer) {
  const auto data = make_distill_data();
  auto cfg = tiny_distill_config();
  cfg.epochs = 5;
  const auto plain = kws::train_cnn_dtw<float>(data.train, data.targets, cfg);
  cfg.gaussian_sigma = 0.0;
  const auto gnl = kws::train_cnn_dtw<float>(data.train, data.targets, cfg);
  EXPECT_EQ(plain.epoch_losses, gnl.epoch_losses);
  const auto& m = data.train.begin()->second;
  EXPECT_EQ(kws::spot(plain.model, m), kws::spot(gnl.model, m));
}

TEST(DistillTest, GaussianNoiseLayerChangesTrajectory) {
  const auto data = make_distill_data();
  auto cfg = tiny_distill_config();
  cfg.epochs = 5;
  const auto plain = kws::train_cnn_dtw<float>(data.train, data.targets, cfg);
  cfg.gaussian_sigma = 0.5;
  const auto gnl = kws::train_cnn_dtw<float>(data.train, data.targets, cfg);
  EXPECT_NE(plain.epoch_losses, gnl.epoch_losses);
}

TEST(DistillTest, MissingTargetsRejected) {
  auto data = make_distill_data();
  data.targets.utterance_ids.pop_back();
  data.targets.values.resize(data.targets.utterance_ids.size() * 2);
  EXPECT_THROW(kws::train_cnn_dtw<float>(data.train, data.targets, tiny_distill_config()),
               kws::MissingTargets);
}

TEST(DistillTest, CostPolarityTargetsRejected) {
  auto data = make_distill_data();
  data.targets.lower_is_match = true;
  EXPECT_THROW(kws::train_cnn_dtw<float>(data.train, data.targets, tiny_distill_config()),
               kws::InvalidConfig);
}

TEST(SpotTest, OutputsAreSigmoidsAndDeterministic) {
  const auto data = make_distill_data();
  auto cfg = tiny_distill_config();
  cfg.epochs = 3;
  const auto result = kws::train_cnn_dtw<float>(data.train, data.targets, cfg);
  const auto& m = data.train.begin()->second;
  const auto a = kws::spot(result.model, m);
  const auto b = kws::spot(result.model, m);
  ASSERT_EQ(a.size(), 2u);
  for (double s : a) {
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
  EXPECT_EQ(a, b);
}

TEST(SpotTest, CheckpointRoundTripPreservesScores) {
  const auto data = make_distill_data();
  auto cfg = tiny_distill_config();
  cfg.epochs = 3;
  const auto result = kws::train_cnn_dtw<float>(data.train, data.targets, cfg);
  const auto path = std::filesystem::temp_directory_path() / "kws_spotter_test.cnn1";
  kws::save_spotter(result.model, path);
  const auto loaded = kws::load_spotter<float>(path);
  EXPECT_EQ(loaded.keyword_ids, result.model.keyword_ids);
  EXPECT_EQ(loaded.kind, Model::Kind::distilled);
  for (const auto& [id, m] : data.train)
    EXPECT_EQ(kws::spot(loaded, m), kws::spot(result.model, m));
}

TEST(SpotTest, ScoreArchiveProducesHigherIsMatchTable) {
  const auto data = make_distill_data();
  auto cfg = tiny_distill_config();
  cfg.epochs = 3;
  const auto result = kws::train_cnn_dtw<float>(data.train, data.targets, cfg);
  const auto table = kws::score_archive(result.model, data.train);
  EXPECT_FALSE(table.lower_is_match);
  EXPECT_EQ(table.keyword_ids, result.model.keyword_ids);
  EXPECT_EQ(table.utterance_ids.size(), data.train.size());
  for (double v : table.values) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(ReferenceArchitectureTest, DefaultShapes) {
  const auto cfg = kws::DistillConfig::reference_architecture();
  EXPECT_EQ(cfg.conv_filters.size(), 10u);
  for (int f : cfg.conv_filters) {
    EXPECT_GE(f, 80);
    EXPECT_LE(f, 512);
  }
  EXPECT_EQ(cfg.dense_units, (std::vector<int>{3000, 3000}));
  EXPECT_DOUBLE_EQ(cfg.dropout_rate, 0.5);
  EXPECT_DOUBLE_EQ(cfg.lr_start, 1e-4);
  EXPECT_DOUBLE_EQ(cfg.lr_end, 1e-5);

  const kws::ClassifierConfig ccfg;
  EXPECT_EQ(ccfg.window_frames, 60);
  EXPECT_EQ(ccfg.conv_filters, (std::vector<int>{64, 128, 256}));
  EXPECT_EQ(ccfg.dense_units, (std::vector<int>{500, 100, 300}));
  EXPECT_DOUBLE_EQ(ccfg.dropout_rate, 0.5);
}

}  // namespace
