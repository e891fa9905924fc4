// tests/eval_test.cpp

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

#include "kws/eval.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <vector>

#include "kws/rng.hpp"

namespace {

// O(n^2) pairwise AUC oracle: P(score+ > score-) with ties counted 1/2.
double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  size_t pairs = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

// Dense threshold sweep.  Walking thresholds from high to low traces the
// operating points in fpr order; the oracle locates where fpr - fnr flips
// sign and linearly interpolates across that step.
double grid_eer(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::vector<double> grid = scores;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<double> thresholds = {grid.back() + 1.0};
  for (size_t i = grid.size(); i-- > 0;) {
    thresholds.push_back(grid[i]);
    if (i > 0) thresholds.push_back((grid[i] + grid[i - 1]) / 2.0);
  }
  thresholds.push_back(grid.front() - 1.0);

  size_t num_pos = 0, num_neg = 0;
  for (int l : labels) (l ? num_pos : num_neg)++;
  double prev_fpr = 0.0, prev_fnr = 1.0;
  for (double th : thresholds) {
    size_t fp = 0, fn = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
      const bool predicted = scores[i] >= th;
      if (predicted && !labels[i]) ++fp;
      if (!predicted && labels[i]) ++fn;
    }
    const double fpr = static_cast<double>(fp) / static_cast<double>(num_neg);
    const double fnr = static_cast<double>(fn) / static_cast<double>(num_pos);
    if (fpr == fnr) return fpr;
    if (fpr > fnr) {  // crossed between the previous point and this one
      const double t = (prev_fnr - prev_fpr) / ((fpr - prev_fpr) - (fnr - prev_fnr));
      return prev_fpr + t * (fpr - prev_fpr);
    }
    prev_fpr = fpr;
    prev_fnr = fnr;
  }
  return 1.0;
}

// Brute-force (fpr, tpr) at one threshold.
std::pair<double, double> count_rates(const std::vector<double>& scores,
                                      const std::vector<int>& labels, double th) {
  size_t tp = 0, fp = 0, num_pos = 0, num_neg = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    (labels[i] ? num_pos : num_neg)++;
    if (scores[i] >= th) (labels[i] ? tp : fp)++;
  }
  return {static_cast<double>(fp) / static_cast<double>(num_neg),
          static_cast<double>(tp) / static_cast<double>(num_pos)};
}

void random_instance(kws::Rng& rng, size_t n, bool tie_heavy,
                     std::vector<double>& scores, std::vector<int>& labels) {
  scores.resize(n);
  labels.resize(n);
  while (true) {
    size_t num_pos = 0;
    for (size_t i = 0; i < n; ++i) {
      labels[i] = rng.uniform() < 0.5 ? 1 : 0;
      num_pos += static_cast<size_t>(labels[i]);
    }
    if (num_pos >= n / 4 && n - num_pos >= n / 4) break;
  }
  for (auto& s : scores)
    s = tie_heavy ? static_cast<double>(rng.below(5)) / 4.0 : rng.gaussian();
}

TEST(RocTest, PerfectSeparationPassesThroughTopLeft) {
  const std::vector<double> scores = {0.9, 0.8, 0.7, 0.2, 0.1};
  const std::vector<int> labels = {1, 1, 1, 0, 0};
  const auto curve = kws::roc(scores, labels);
  bool top_left = false;
  for (const auto& p : curve.points)
    if (p.fpr == 0.0 && p.tpr == 1.0) top_left = true;
  EXPECT_TRUE(top_left);
  EXPECT_EQ(curve.points.front().fpr, 0.0);
  EXPECT_EQ(curve.points.front().tpr, 0.0);
  EXPECT_EQ(curve.points.back().fpr, 1.0);
  EXPECT_EQ(curve.points.back().tpr, 1.0);
}

TEST(RocTest, AllScoresEqualGivesDiagonal) {
  const std::vector<double> scores = {0.5, 0.5, 0.5, 0.5};
  const std::vector<int> labels = {1, 0, 1, 0};
  const auto curve = kws::roc(scores, labels);
  ASSERT_EQ(curve.points.size(), 2u);  // (0,0) and the single tie-group flip
  for (const auto& p : curve.points) EXPECT_DOUBLE_EQ(p.fpr, p.tpr);
  EXPECT_DOUBLE_EQ(kws::auc(curve), 0.5);
  EXPECT_DOUBLE_EQ(kws::eer(curve), 0.5);
}

TEST(RocTest, MatchesBruteForceCountingAtEveryThreshold) {
  kws::Rng rng(7);
  std::vector<double> scores;
  std::vector<int> labels;
  random_instance(rng, 20, true, scores, labels);
  const auto curve = kws::roc(scores, labels);
  for (size_t i = 1; i < curve.points.size(); ++i) {
    const auto [fpr, tpr] = count_rates(scores, labels, curve.points[i].threshold);
    EXPECT_DOUBLE_EQ(curve.points[i].fpr, fpr);
    EXPECT_DOUBLE_EQ(curve.points[i].tpr, tpr);
  }
  // monotone along the sweep
  for (size_t i = 1; i < curve.points.size(); ++i) {
    EXPECT_GE(curve.points[i].fpr, curve.points[i - 1].fpr);
    EXPECT_GE(curve.points[i].tpr, curve.points[i - 1].tpr);
  }
}

TEST(RocTest, DegenerateLabelsRejected) {
  EXPECT_THROW(kws::roc({0.1, 0.2}, {1, 1}), kws::DegenerateLabels);
  EXPECT_THROW(kws::roc({0.1, 0.2}, {0, 0}), kws::DegenerateLabels);
}

TEST(AucTest, PerfectAndInvertedSeparation) {
  const std::vector<double> scores = {0.9, 0.8, 0.2, 0.1};
  EXPECT_DOUBLE_EQ(kws::auc(kws::roc(scores, {1, 1, 0, 0})), 1.0);
  EXPECT_DOUBLE_EQ(kws::auc(kws::roc(scores, {0, 0, 1, 1})), 0.0);
}

TEST(AucTest, MatchesPairwiseOracle) {
  kws::Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> scores;
    std::vector<int> labels;
    random_instance(rng, 30, trial % 2 == 0, scores, labels);
    EXPECT_NEAR(kws::auc(kws::roc(scores, labels)), pairwise_auc(scores, labels), 1e-12);
  }
}

TEST(AucTest, NegationComplementsWithoutTies) {
  kws::Rng rng(13);
  std::vector<double> scores(25);
  std::vector<int> labels(25);
  for (size_t i = 0; i < scores.size(); ++i) {
    scores[i] = rng.gaussian();  // continuous, ties have measure zero
    labels[i] = i % 3 == 0 ? 1 : 0;
  }
  std::vector<double> negated = scores;
  for (auto& s : negated) s = -s;
  EXPECT_NEAR(kws::auc(kws::roc(scores, labels)) + kws::auc(kws::roc(negated, labels)),
              1.0, 1e-12);
}

TEST(EerTest, PerfectSeparationIsZero) {
  EXPECT_DOUBLE_EQ(kws::eer(kws::roc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0})), 0.0);
}

TEST(EerTest, MatchesDenseGridOracle) {
  kws::Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> scores;
    std::vector<int> labels;
    const size_t n = 20;
    random_instance(rng, n, trial % 2 == 0, scores, labels);
    const double got = kws::eer(kws::roc(scores, labels));
    const double want = grid_eer(scores, labels);
    EXPECT_NEAR(got, want, 1.0 / (2.0 * static_cast<double>(n)))
        << "trial " << trial;
  }
}

kws::ScoreMatrix demo_table() {
  kws::ScoreMatrix sm;
  sm.keyword_ids = {"kw0", "kw1"};
  sm.utterance_ids = {"u0", "u1", "u2", "u3"};
  sm.lower_is_match = false;
  sm.values = {
      0.9, 0.1,  // u0
      0.2, 0.8,  // u1
      0.7, 0.3,  // u2
      0.1, 0.6,  // u3
  };
  return sm;
}

std::map<std::string, std::set<std::string>> demo_truth() {
  return {
      {"u0", {"kw0"}},
      {"u1", {"kw1"}},
      {"u2", {"kw0", "kw1"}},
      {"u3", {}},
  };
}

TEST(EvaluateTest, PolarityInvariance) {
  const auto table = demo_table();
  kws::ScoreMatrix flipped = table;
  flipped.lower_is_match = true;
  for (auto& v : flipped.values) v = -v;
  const auto a = kws::evaluate_scores("sys", "mfcc39", table, demo_truth());
  const auto b = kws::evaluate_scores("sys", "mfcc39", flipped, demo_truth());
  EXPECT_DOUBLE_EQ(a.pooled.auc_value, b.pooled.auc_value);
  EXPECT_DOUBLE_EQ(a.pooled.eer_value, b.pooled.eer_value);
}

TEST(EvaluateTest, MonotoneTransformInvariance) {
  const auto table = demo_table();
  kws::ScoreMatrix warped = table;
  for (auto& v : warped.values) v = std::exp(3.0 * v);  // strictly increasing
  const auto a = kws::evaluate_scores("sys", "mfcc39", table, demo_truth());
  const auto b = kws::evaluate_scores("sys2", "mfcc39", warped, demo_truth());
  EXPECT_DOUBLE_EQ(a.pooled.auc_value, b.pooled.auc_value);
  EXPECT_DOUBLE_EQ(a.pooled.eer_value, b.pooled.eer_value);
  ASSERT_EQ(a.per_keyword.size(), b.per_keyword.size());
  for (size_t i = 0; i < a.per_keyword.size(); ++i)
    EXPECT_DOUBLE_EQ(a.per_keyword[i].auc_value, b.per_keyword[i].auc_value);
}

TEST(EvaluateTest, SingleKeywordPooledEqualsPerKeyword) {
  kws::ScoreMatrix sm;
  sm.keyword_ids = {"kw0"};
  sm.utterance_ids = {"u0", "u1", "u2", "u3"};
  sm.lower_is_match = false;
  sm.values = {0.9, 0.2, 0.8, 0.3};
  std::map<std::string, std::set<std::string>> truth = {
      {"u0", {"kw0"}}, {"u1", {}}, {"u2", {"kw0"}}, {"u3", {}}};
  const auto report = kws::evaluate_scores("sys", "mfcc39", sm, truth);
  ASSERT_EQ(report.per_keyword.size(), 1u);
  EXPECT_DOUBLE_EQ(report.pooled.auc_value, report.per_keyword[0].auc_value);
  EXPECT_DOUBLE_EQ(report.pooled.eer_value, report.per_keyword[0].eer_value);
  EXPECT_DOUBLE_EQ(report.macro.auc_value, report.per_keyword[0].auc_value);
}

TEST(EvaluateTest, MissingTruthThrows) {
  auto truth = demo_truth();
  truth.erase("u2");
  EXPECT_THROW(kws::evaluate_scores("sys", "mfcc39", demo_table(), truth),
               kws::MissingGroundTruth);
}

TEST(EvaluateTest, CsvReportShape) {
  const auto report = kws::evaluate_scores("dtw-ks", "mfcc39", demo_table(), demo_truth());
  const auto p = std::filesystem::temp_directory_path() / "kws_eval_test_report.csv";
  kws::save_report_csv({report}, p);
  std::ifstream is(p);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "system,feature,keyword,auc,eer,n_pos,n_neg");
  std::getline(is, line);
  EXPECT_EQ(line.rfind("dtw-ks,mfcc39,ALL,", 0), 0u);
  std::getline(is, line);
  EXPECT_EQ(line.rfind("dtw-ks,mfcc39,MACRO,", 0), 0u);
  size_t keyword_rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++keyword_rows;
  EXPECT_EQ(keyword_rows, report.per_keyword.size());
}

TEST(EvaluateTest, RocPointFile) {
  const auto curve = kws::roc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0});
  const auto p = std::filesystem::temp_directory_path() / "kws_eval_test_roc.tsv";
  kws::save_roc_points(curve, p);
  std::ifstream is(p);
  std::string line;
  size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    EXPECT_NE(line.find('\t'), std::string::npos);
    ++rows;
  }
  EXPECT_EQ(rows, curve.points.size());
}

}  // namespace
