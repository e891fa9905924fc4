// kws/eval.hpp

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
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kws/common.hpp"
#include "kws/dtw.hpp"
#include "kws/io.hpp"

namespace kws {

// ROC / AUC / EER.  Scores are oriented so that higher means "keyword
// present"; DTW cost tables are negated before they get here.

struct RocPoint {
  double threshold;  // classify positive iff score >= threshold
  double fpr;
  double tpr;
};

struct RocCurve {
  std::vector<RocPoint> points;  // starts at (inf, 0, 0), ends at (min, 1, 1)
};

// Threshold sweep over the distinct score values; tied scores flip
// together.
inline RocCurve roc(const std::vector<double>& scores,
                    const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw DataError("roc: scores and labels differ in length");
  size_t num_pos = 0, num_neg = 0;
  for (int l : labels) (l ? num_pos : num_neg)++;
  if (num_pos == 0 || num_neg == 0)
    throw DegenerateLabels("roc needs at least one positive and one negative");

  std::vector<size_t> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  size_t tp = 0, fp = 0, i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (labels[order[i]] ? tp : fp)++;
      ++i;
    }
    curve.points.push_back({threshold,
                            static_cast<double>(fp) / static_cast<double>(num_neg),
                            static_cast<double>(tp) / static_cast<double>(num_pos)});
  }
  return curve;
}

// Trapezoidal area over the false-positive axis; with grouped ties this
// equals the Mann-Whitney statistic counting ties as one half.
inline double auc(const RocCurve& curve) {
  double area = 0.0;
  for (size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  return area;
}

// Rate at which false positives equal false negatives, linearly
// interpolated between the adjacent curve points where the difference
// changes sign.
inline double eer(const RocCurve& curve) {
  auto diff = [](const RocPoint& p) { return p.fpr - (1.0 - p.tpr); };
  for (size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    const double da = diff(a);
    const double db = diff(b);
    if (da == 0.0) return a.fpr;
    if (db == 0.0) {
      if (i + 1 == curve.points.size() || diff(curve.points[i + 1]) >= 0.0) return b.fpr;
      continue;
    }
    if (da < 0.0 && db > 0.0) {
      const double t = -da / (db - da);
      return a.fpr + t * (b.fpr - a.fpr);
    }
  }
  return diff(curve.points.back()) < 0.0 ? 0.0 : curve.points.back().fpr;
}

struct KeywordMetrics {
  std::string keyword;
  double auc_value = 0.0;
  double eer_value = 0.0;
  size_t num_pos = 0;
  size_t num_neg = 0;
};

struct EvalReport {
  std::string system_id;
  std::string feature_kind;
  std::vector<KeywordMetrics> per_keyword;  // keywords without both label
                                            // classes are skipped
  KeywordMetrics pooled;  // micro pooling: all decisions concatenated
  KeywordMetrics macro;   // unweighted mean over per-keyword metrics
  std::map<std::string, RocCurve> curves;  // per keyword plus "ALL"
};

// Scores one system's table against the per-utterance keyword truth.
// Micro-pooled metrics over all (utterance, keyword) decisions are the
// canonical numbers; keyword-averaged metrics ride along for comparison.
inline EvalReport evaluate_scores(
    const std::string& system_id, const std::string& feature_kind,
    const ScoreMatrix& table,
    const std::map<std::string, std::set<std::string>>& truth) {
  EvalReport report;
  report.system_id = system_id;
  report.feature_kind = feature_kind;

  const double sign = table.lower_is_match ? -1.0 : 1.0;
  const size_t num_kw = table.keyword_ids.size();

  std::vector<double> pooled_scores;
  std::vector<int> pooled_labels;
  pooled_scores.reserve(table.utterance_ids.size() * num_kw);
  pooled_labels.reserve(table.utterance_ids.size() * num_kw);

  std::vector<std::vector<double>> kw_scores(num_kw);
  std::vector<std::vector<int>> kw_labels(num_kw);

  for (size_t u = 0; u < table.utterance_ids.size(); ++u) {
    const auto& utt_id = table.utterance_ids[u];
    const auto it = truth.find(utt_id);
    if (it == truth.end())
      throw MissingGroundTruth("no ground truth for utterance " + utt_id);
    for (size_t k = 0; k < num_kw; ++k) {
      const double s = sign * table.at(u, k);
      const int label = it->second.count(table.keyword_ids[k]) ? 1 : 0;
      pooled_scores.push_back(s);
      pooled_labels.push_back(label);
      kw_scores[k].push_back(s);
      kw_labels[k].push_back(label);
    }
  }

  const RocCurve pooled_curve = roc(pooled_scores, pooled_labels);
  report.pooled.keyword = "ALL";
  report.pooled.auc_value = auc(pooled_curve);
  report.pooled.eer_value = eer(pooled_curve);
  for (int l : pooled_labels) (l ? report.pooled.num_pos : report.pooled.num_neg)++;
  report.curves["ALL"] = pooled_curve;

  double auc_sum = 0.0, eer_sum = 0.0;
  for (size_t k = 0; k < num_kw; ++k) {
    KeywordMetrics m;
    m.keyword = table.keyword_ids[k];
    for (int l : kw_labels[k]) (l ? m.num_pos : m.num_neg)++;
    if (m.num_pos == 0 || m.num_neg == 0) continue;  // degenerate in this split
    const RocCurve c = roc(kw_scores[k], kw_labels[k]);
    m.auc_value = auc(c);
    m.eer_value = eer(c);
    auc_sum += m.auc_value;
    eer_sum += m.eer_value;
    report.curves[m.keyword] = c;
    report.per_keyword.push_back(std::move(m));
  }
  report.macro.keyword = "MACRO";
  if (!report.per_keyword.empty()) {
    report.macro.auc_value = auc_sum / static_cast<double>(report.per_keyword.size());
    report.macro.eer_value = eer_sum / static_cast<double>(report.per_keyword.size());
  }
  report.macro.num_pos = report.pooled.num_pos;
  report.macro.num_neg = report.pooled.num_neg;
  return report;
}

// CSV rows: system,feature,keyword,auc,eer,n_pos,n_neg with the pooled row
// keyed "ALL" and the keyword-averaged row keyed "MACRO".
inline void save_report_csv(const std::vector<EvalReport>& reports,
                            const std::filesystem::path& path) {
  std::ofstream os = open_output(path, std::ios::out);
  os << "system,feature,keyword,auc,eer,n_pos,n_neg\n";
  char buf[128];
  auto row = [&](const EvalReport& r, const KeywordMetrics& m) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.6f,%.6f,%zu,%zu\n",
                  r.system_id.c_str(), r.feature_kind.c_str(), m.keyword.c_str(),
                  m.auc_value, m.eer_value, m.num_pos, m.num_neg);
    os << buf;
  };
  for (const auto& r : reports) {
    row(r, r.pooled);
    row(r, r.macro);
    for (const auto& m : r.per_keyword) row(r, m);
  }
  if (!os) throw IoError("write failed: " + path.string());
}

// One ROC point per line: threshold, fpr, tpr, tab-separated.
inline void save_roc_points(const RocCurve& curve,
                            const std::filesystem::path& path) {
  std::ofstream os = open_output(path, std::ios::out);
  char buf[96];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof(buf), "%.9g\t%.9g\t%.9g\n", p.threshold, p.fpr, p.tpr);
    os << buf;
  }
  if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace kws
