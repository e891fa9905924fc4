// tests/sae_test.cpp

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

#include "kws/sae.hpp"

#include <gtest/gtest.h>

#include <filesystem>

#include "kws/rng.hpp"

namespace {

kws::FeatureMap two_point_dataset() {
  // two distinct frames, repeated so batches have something to chew on
  kws::FeatureMatrix m(8, 3);
  const float a[3] = {1.0f, -2.0f, 0.5f};
  const float b[3] = {-1.0f, 1.0f, 2.0f};
  for (int t = 0; t < 8; ++t)
    for (int d = 0; d < 3; ++d) m.at(t, d) = (t % 2 == 0 ? a : b)[d];
  kws::FeatureMap map;
  map.emplace("utt0", std::move(m));
  return map;
}

kws::FeatureMap random_dataset(int num_frames, int dim, uint64_t seed) {
  kws::Rng rng(seed);
  kws::FeatureMatrix m(num_frames, dim);
  for (auto& v : m.data) v = static_cast<float>(rng.gaussian() * 3.0 + 1.0);
  kws::FeatureMap map;
  map.emplace("utt0", std::move(m));
  return map;
}

std::vector<std::vector<double>> standardized_rows(const kws::SaeModel& model,
                                                   const kws::FeatureMap& data) {
  std::vector<std::vector<double>> rows;
  for (const auto& [id, m] : data) {
    for (int t = 0; t < m.num_frames; ++t) {
      std::vector<double> row(static_cast<size_t>(m.dim));
      for (int d = 0; d < m.dim; ++d)
        row[static_cast<size_t>(d)] =
            (m.at(t, d) - model.feat_mean[static_cast<size_t>(d)]) /
            model.feat_std[static_cast<size_t>(d)];
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

kws::SaeConfig tiny_config() {
  kws::SaeConfig cfg;
  cfg.layer_dims = {8, 4};
  cfg.extract_layer = 2;
  cfg.noise_sigma = 0.0;
  cfg.pretrain_epochs = 60;
  cfg.finetune_epochs = 400;
  cfg.learning_rate = 5e-3;
  cfg.batch_size = 4;
  cfg.seed = 3;
  return cfg;
}

TEST(SaeTest, TwoPointDatasetReconstructsBelowThreshold) {
  const auto data = two_point_dataset();
  const auto model = kws::train_sae(data, tiny_config());
  const double mse = kws::sae_reconstruction_mse(model, standardized_rows(model, data));
  EXPECT_LT(mse, 1e-3);
}

TEST(SaeTest, ZeroEpochsEqualsInitialization) {
  auto cfg = tiny_config();
  cfg.pretrain_epochs = 0;
  cfg.finetune_epochs = 0;
  const auto data = two_point_dataset();
  const auto a = kws::train_sae(data, cfg);
  const auto b = kws::train_sae(data, cfg);
  for (size_t l = 0; l < a.weights.size(); ++l) {
    EXPECT_EQ(a.weights[l].data, b.weights[l].data);
    EXPECT_EQ(a.biases[l].data, b.biases[l].data);
  }
  EXPECT_EQ(a.head_weights.data, b.head_weights.data);
  // encode is deterministic given the seed
  const auto& m = data.at("utt0");
  const auto ea = kws::sae_encode(a, m);
  const auto eb = kws::sae_encode(b, m);
  EXPECT_EQ(ea.data, eb.data);
}

TEST(SaeTest, TrainingIsDeterministic) {
  auto cfg = tiny_config();
  cfg.pretrain_epochs = 5;
  cfg.finetune_epochs = 5;
  cfg.noise_sigma = 0.2;
  const auto data = random_dataset(32, 5, 11);
  const auto a = kws::train_sae(data, cfg);
  const auto b = kws::train_sae(data, cfg);
  for (size_t l = 0; l < a.weights.size(); ++l)
    EXPECT_EQ(a.weights[l].data, b.weights[l].data);
  EXPECT_EQ(a.head_weights.data, b.head_weights.data);
}

TEST(SaeTest, FineTuningDoesNotWorsenReconstruction) {
  const auto data = random_dataset(48, 4, 21);
  auto cfg = tiny_config();
  cfg.layer_dims = {6, 3};
  cfg.extract_layer = 2;
  cfg.pretrain_epochs = 30;
  cfg.finetune_epochs = 0;
  cfg.seed = 5;
  const auto pretrained_only = kws::train_sae(data, cfg);
  cfg.finetune_epochs = 120;
  const auto fine_tuned = kws::train_sae(data, cfg);
  const auto rows = standardized_rows(pretrained_only, data);
  const double before = kws::sae_reconstruction_mse(pretrained_only, rows);
  const double after = kws::sae_reconstruction_mse(fine_tuned, rows);
  EXPECT_LE(after, before + 1e-12);
}

TEST(SaeTest, EncodeShapeAndKind) {
  const auto data = random_dataset(16, 5, 31);
  auto cfg = tiny_config();
  cfg.layer_dims = {7, 4, 3};
  cfg.extract_layer = 2;
  cfg.pretrain_epochs = 2;
  cfg.finetune_epochs = 2;
  const auto model = kws::train_sae(data, cfg);

  kws::FeatureMatrix one(1, 5);
  for (int d = 0; d < 5; ++d) one.at(0, d) = static_cast<float>(d);
  const auto out = kws::sae_encode(model, one);
  EXPECT_EQ(out.num_frames, 1);
  EXPECT_EQ(out.dim, 4);  // width of the extraction layer
  EXPECT_EQ(out.kind, kws::FeatureKind::sae39);
}

TEST(SaeTest, EncodeIsFrameLocal) {
  const auto data = random_dataset(16, 4, 41);
  auto cfg = tiny_config();
  cfg.layer_dims = {6, 3};
  cfg.extract_layer = 2;
  cfg.pretrain_epochs = 3;
  cfg.finetune_epochs = 3;
  const auto model = kws::train_sae(data, cfg);

  kws::Rng rng(42);
  kws::FeatureMatrix m(6, 4);
  for (auto& v : m.data) v = static_cast<float>(rng.gaussian());
  const auto encoded = kws::sae_encode(model, m);

  // permuting input rows permutes output rows identically
  kws::FeatureMatrix reversed(6, 4);
  for (int t = 0; t < 6; ++t)
    for (int d = 0; d < 4; ++d) reversed.at(t, d) = m.at(5 - t, d);
  const auto encoded_rev = kws::sae_encode(model, reversed);
  for (int t = 0; t < 6; ++t)
    for (int d = 0; d < encoded.dim; ++d)
      EXPECT_EQ(encoded_rev.at(t, d), encoded.at(5 - t, d));

  // encode commutes with row concatenation
  kws::FeatureMatrix doubled(12, 4);
  for (int t = 0; t < 12; ++t)
    for (int d = 0; d < 4; ++d) doubled.at(t, d) = m.at(t % 6, d);
  const auto encoded_doubled = kws::sae_encode(model, doubled);
  for (int t = 0; t < 12; ++t)
    for (int d = 0; d < encoded.dim; ++d)
      EXPECT_EQ(encoded_doubled.at(t, d), encoded.at(t % 6, d));
}

TEST(SaeTest, DefaultConfigHas39WideFourthLayer) {
  const kws::SaeConfig cfg;
  ASSERT_EQ(cfg.layer_dims.size(), 7u);
  EXPECT_EQ(cfg.extract_layer, 4);
  EXPECT_EQ(cfg.layer_dims[3], 39);
}

TEST(SaeTest, CheckpointRoundTrip) {
  const auto data = random_dataset(24, 4, 51);
  auto cfg = tiny_config();
  cfg.layer_dims = {5, 3};
  cfg.extract_layer = 2;
  cfg.pretrain_epochs = 3;
  cfg.finetune_epochs = 3;
  const auto model = kws::train_sae(data, cfg);

  const auto path = std::filesystem::temp_directory_path() / "kws_sae_test.sae";
  kws::save_sae(model, path);
  const auto loaded = kws::load_sae(path);
  EXPECT_EQ(loaded.input_dim, model.input_dim);
  EXPECT_EQ(loaded.feat_mean, model.feat_mean);
  EXPECT_EQ(loaded.feat_std, model.feat_std);
  for (size_t l = 0; l < model.weights.size(); ++l)
    EXPECT_EQ(loaded.weights[l].data, model.weights[l].data);

  const auto& m = data.at("utt0");
  EXPECT_EQ(kws::sae_encode(loaded, m).data, kws::sae_encode(model, m).data);
}

TEST(SaeTest, Errors) {
  EXPECT_THROW(kws::train_sae({}, tiny_config()), kws::EmptyInput);

  auto cfg = tiny_config();
  cfg.extract_layer = 5;  // beyond the two layers
  EXPECT_THROW(kws::train_sae(two_point_dataset(), cfg), kws::InvalidConfig);

  const auto model = kws::train_sae(two_point_dataset(), tiny_config());
  kws::FeatureMatrix wrong_dim(3, 7);
  EXPECT_THROW(kws::sae_encode(model, wrong_dim), kws::DimMismatch);
}

}  // namespace
