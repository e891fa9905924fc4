// kws/dtw.hpp

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
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "kws/common.hpp"
#include "kws/feature_matrix.hpp"
#include "kws/io.hpp"
#include "kws/manifest.hpp"
#include "kws/parallel.hpp"

namespace kws {

// Exemplar-based keyword search.  An isolated keyword slides over a longer
// utterance; inside each candidate window a full endpoint-constrained DTW
// with steps {(1,0),(0,1),(1,1)} accumulates the per-frame cosine cost over
// the cheapest path and divides by the path's node count.  The normalized
// cost lands in [0, 2] with 0 meaning an exact match.

struct DtwConfig {
  int window_skip = 3;               // stride of candidate window starts
  double length_factor_min = 0.8;    // window lengths as multiples of T_k
  double length_factor_max = 1.2;
  int length_grid = 3;               // number of lengths across the factor range
  std::optional<int> band_width;     // Sakoe-Chiba radius; none = exact

  void validate() const {
    if (window_skip < 1) throw InvalidConfig("dtw: window_skip must be >= 1");
    if (!(0.0 < length_factor_min && length_factor_min <= 1.0 &&
          1.0 <= length_factor_max))
      throw InvalidConfig("dtw: need 0 < min factor <= 1 <= max factor");
    if (length_grid < 1) throw InvalidConfig("dtw: length_grid must be >= 1");
    if (band_width && *band_width < 0)
      throw InvalidConfig("dtw: band_width must be >= 0");
  }
};

namespace detail {

inline std::atomic<bool>& zero_vector_warned() {
  static std::atomic<bool> flag{false};
  return flag;
}

inline void note_zero_vector() {
  if (!zero_vector_warned().exchange(true)) {
    std::cerr << "kws: zero-norm frame met in cosine cost; scoring it 1.0\n";
  }
}

}  // namespace detail

// 1 - cos(a, b) in [0, 2].  A zero-norm frame carries no direction, so it
// scores the uninformative midpoint 1.0 (logged once per process).
inline double cosine_cost(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size())
    throw DimMismatch("cosine_cost: frame dims differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    detail::note_zero_vector();
    return 1.0;
  }
  // sqrt of the product keeps cost(a, a) exactly zero
  double c = 1.0 - dot / std::sqrt(na * nb);
  if (c < 0.0) c = 0.0;
  if (c > 2.0) c = 2.0;
  return c;
}

namespace detail {

// Precomputed T_k x T_s cosine costs between every keyword frame and every
// utterance frame.  Windows of the sweep share this matrix.
class CosineCostMatrix {
 public:
  CosineCostMatrix(const FeatureMatrix& k, const FeatureMatrix& s)
      : rows_(k.num_frames), cols_(s.num_frames),
        costs_(static_cast<size_t>(rows_) * cols_) {
    if (k.dim != s.dim) throw DimMismatch("dtw: feature dims differ");
    for (int i = 0; i < rows_; ++i) {
      const auto a = k.row(i);
      for (int j = 0; j < cols_; ++j) {
        costs_[static_cast<size_t>(i) * cols_ + j] = cosine_cost(a, s.row(j));
      }
    }
  }

  double at(int i, int j) const {
    return costs_[static_cast<size_t>(i) * cols_ + j];
  }
  int rows() const { return rows_; }
  int cols() const { return cols_; }

 private:
  int rows_, cols_;
  std::vector<double> costs_;
};

// DP over the cost submatrix spanning utterance columns [col0, col0+width).
// Minimizes (path sum, node count) lexicographically; the node count of the
// winning path is what the sum is normalized by, and the length tie-break
// makes the result well defined when two paths tie on sum.
inline double dtw_normalized(const CosineCostMatrix& c, int col0, int width,
                             std::optional<int> band) {
  const int rows = c.rows();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Band radius widened so both corners stay reachable.
  int radius = std::numeric_limits<int>::max();
  if (band) radius = std::max(*band, std::abs(rows - width));

  std::vector<double> prev_sum(static_cast<size_t>(width), kInf);
  std::vector<int> prev_len(static_cast<size_t>(width), 0);
  std::vector<double> cur_sum(static_cast<size_t>(width), kInf);
  std::vector<int> cur_len(static_cast<size_t>(width), 0);

  for (int i = 0; i < rows; ++i) {
    int jlo = 0, jhi = width - 1;
    if (band) {
      jlo = std::max(0, i - radius);
      jhi = std::min(width - 1, i + radius);
    }
    std::fill(cur_sum.begin(), cur_sum.end(), kInf);
    for (int j = jlo; j <= jhi; ++j) {
      const double cost = c.at(i, col0 + j);
      double best_sum;
      int best_len;
      if (i == 0 && j == 0) {
        best_sum = 0.0;
        best_len = 0;
      } else {
        best_sum = kInf;
        best_len = 0;
        auto consider = [&](double s, int l) {
          if (s < best_sum || (s == best_sum && l < best_len)) {
            best_sum = s;
            best_len = l;
          }
        };
        if (j > 0) consider(cur_sum[static_cast<size_t>(j - 1)], cur_len[static_cast<size_t>(j - 1)]);
        if (i > 0) consider(prev_sum[static_cast<size_t>(j)], prev_len[static_cast<size_t>(j)]);
        if (i > 0 && j > 0) consider(prev_sum[static_cast<size_t>(j - 1)], prev_len[static_cast<size_t>(j - 1)]);
      }
      cur_sum[static_cast<size_t>(j)] = best_sum + cost;
      cur_len[static_cast<size_t>(j)] = best_len + 1;
    }
    std::swap(prev_sum, cur_sum);
    std::swap(prev_len, cur_len);
  }
  const double total = prev_sum[static_cast<size_t>(width - 1)];
  const int nodes = prev_len[static_cast<size_t>(width - 1)];
  return total / nodes;
}

}  // namespace detail

// Normalized full-sequence DTW alignment cost between two sequences.
inline double dtw_align(const FeatureMatrix& keyword, const FeatureMatrix& sequence,
                        std::optional<int> band = std::nullopt) {
  if (keyword.num_frames < 1 || sequence.num_frames < 1)
    throw DataError("dtw_align: empty sequence");
  detail::CosineCostMatrix costs(keyword, sequence);
  return detail::dtw_normalized(costs, 0, sequence.num_frames, band);
}

struct SweepHit {
  double cost = 2.0;
  int start = 0;
  int length = 0;
};

// Best (lowest) alignment cost of the keyword against windows of the
// utterance.  Window lengths are multiples of the keyword length drawn from
// the config's factor grid; starts advance by window_skip, plus one final
// window flush against the utterance end so the tail is always covered.
// Windows longer than the utterance degenerate to the whole utterance.
// Ties go to the earliest start, then the shortest window.
inline double sweep_min(const FeatureMatrix& keyword, const FeatureMatrix& utterance,
                        const DtwConfig& cfg, SweepHit* hit = nullptr) {
  cfg.validate();
  if (keyword.dim != utterance.dim) throw DimMismatch("sweep_min: feature dims differ");
  const int t_k = keyword.num_frames;
  const int t_s = utterance.num_frames;

  std::vector<int> lengths;
  for (int g = 0; g < cfg.length_grid; ++g) {
    const double f =
        cfg.length_grid == 1
            ? cfg.length_factor_min
            : cfg.length_factor_min + (cfg.length_factor_max - cfg.length_factor_min) *
                                          static_cast<double>(g) / (cfg.length_grid - 1);
    const int len = std::max(1, static_cast<int>(std::lround(f * t_k)));
    lengths.push_back(len);
  }

  // (start, length) pairs; the set both dedupes and fixes evaluation order.
  std::set<std::pair<int, int>> windows;
  const int min_len = *std::min_element(lengths.begin(), lengths.end());
  if (t_s < min_len) {
    windows.emplace(0, t_s);
  } else {
    for (int len : lengths) {
      if (len >= t_s) {
        windows.emplace(0, t_s);
        continue;
      }
      for (int start = 0; start + len <= t_s; start += cfg.window_skip)
        windows.emplace(start, len);
      windows.emplace(t_s - len, len);  // tail window, clipped to the end
    }
  }

  detail::CosineCostMatrix costs(keyword, utterance);
  SweepHit best;
  best.cost = std::numeric_limits<double>::infinity();
  for (const auto& [start, len] : windows) {
    const double c = detail::dtw_normalized(costs, start, len, cfg.band_width);
    if (c < best.cost) best = SweepHit{c, start, len};
  }
  if (hit) *hit = best;
  return best.cost;
}

// Keyword-spotting score: minimum over exemplars of the sweep cost.
inline double keyword_score_ks(const std::vector<const FeatureMatrix*>& exemplars,
                               const FeatureMatrix& utterance, const DtwConfig& cfg) {
  if (exemplars.empty()) throw EmptyExemplarList("keyword_score_ks: no exemplars");
  double best = std::numeric_limits<double>::infinity();
  for (const FeatureMatrix* k : exemplars)
    best = std::min(best, sweep_min(*k, utterance, cfg));
  return best;
}

// Query-by-example variant: mean over exemplars of the sweep cost.
inline double keyword_score_qbye(const std::vector<const FeatureMatrix*>& exemplars,
                                 const FeatureMatrix& utterance, const DtwConfig& cfg) {
  if (exemplars.empty()) throw EmptyExemplarList("keyword_score_qbye: no exemplars");
  double sum = 0.0;
  for (const FeatureMatrix* k : exemplars) sum += sweep_min(*k, utterance, cfg);
  return sum / static_cast<double>(exemplars.size());
}

// Per-(utterance, keyword) score table.  Lower-is-match for DTW costs,
// higher-is-match for model scores and targets; the polarity travels with
// the table so downstream evaluation cannot silently flip signs.
struct ScoreMatrix {
  std::vector<std::string> utterance_ids;
  std::vector<std::string> keyword_ids;
  std::vector<double> values;  // row-major |U| x L
  bool lower_is_match = true;

  double at(size_t u, size_t k) const { return values[u * keyword_ids.size() + k]; }
  double& at(size_t u, size_t k) { return values[u * keyword_ids.size() + k]; }
};

struct TargetVector {
  std::string utterance_id;
  std::vector<double> y;  // length L, in [0, 1]
};

enum class ScoreMode { ks, qbye };

// Fills the |U| x L cost matrix.  Cells are independent, so the work is
// split across workers; the output does not depend on the partitioning.
inline ScoreMatrix search_corpus(const KeywordSet& keywords,
                                 const FeatureMap& exemplar_feats,
                                 const FeatureMap& utterance_feats,
                                 const DtwConfig& cfg, ScoreMode mode,
                                 int workers = 1) {
  cfg.validate();

  // All features must share dimension and kind.
  int dim = -1;
  FeatureKind kind{};
  auto check = [&](const FeatureMatrix& m, const std::string& id) {
    if (dim < 0) {
      dim = m.dim;
      kind = m.kind;
    } else if (m.dim != dim || m.kind != kind) {
      throw MixedFeatureKinds("search_corpus: record " + id +
                              " disagrees on feature dim or kind");
    }
  };
  for (const auto& [id, m] : exemplar_feats) check(m, id);
  for (const auto& [id, m] : utterance_feats) check(m, id);

  ScoreMatrix sm;
  sm.keyword_ids = keywords.keywords;
  sm.lower_is_match = true;
  std::vector<const FeatureMatrix*> utts;
  for (const auto& [id, m] : utterance_feats) {
    sm.utterance_ids.push_back(id);
    utts.push_back(&m);
  }
  const size_t num_kw = sm.keyword_ids.size();
  sm.values.assign(sm.utterance_ids.size() * num_kw, 0.0);

  std::vector<std::vector<const FeatureMatrix*>> kw_exemplars(num_kw);
  for (size_t k = 0; k < num_kw; ++k) {
    const auto it = keywords.exemplars.find(sm.keyword_ids[k]);
    if (it == keywords.exemplars.end() || it->second.empty())
      throw EmptyExemplarList("no exemplars for keyword " + sm.keyword_ids[k]);
    for (const std::string& ex_id : it->second) {
      const auto fit = exemplar_feats.find(ex_id);
      if (fit == exemplar_feats.end())
        throw MissingInput("exemplar features missing for " + ex_id);
      kw_exemplars[k].push_back(&fit->second);
    }
  }

  parallel_for(sm.values.size(), workers, [&](size_t cell) {
    const size_t u = cell / num_kw;
    const size_t k = cell % num_kw;
    sm.values[cell] = mode == ScoreMode::ks
                          ? keyword_score_ks(kw_exemplars[k], *utts[u], cfg)
                          : keyword_score_qbye(kw_exemplars[k], *utts[u], cfg);
  });
  return sm;
}

// Maps DTW costs c in [0,2] to soft targets y = 1 - c/2 in [0,1].
inline std::vector<TargetVector> make_targets(const ScoreMatrix& costs) {
  const size_t num_kw = costs.keyword_ids.size();
  std::vector<TargetVector> targets;
  targets.reserve(costs.utterance_ids.size());
  for (size_t u = 0; u < costs.utterance_ids.size(); ++u) {
    TargetVector tv;
    tv.utterance_id = costs.utterance_ids[u];
    tv.y.resize(num_kw);
    for (size_t k = 0; k < num_kw; ++k) {
      const double c = costs.at(u, k);
      if (!(c >= 0.0 && c <= 2.0))
        throw OutOfRange("cost " + std::to_string(c) + " outside [0,2] for " +
                         tv.utterance_id + "/" + costs.keyword_ids[k]);
      tv.y[k] = 1.0 - c / 2.0;
    }
    targets.push_back(std::move(tv));
  }
  return targets;
}

inline ScoreMatrix targets_to_table(const std::vector<TargetVector>& targets,
                                    const std::vector<std::string>& keyword_ids) {
  ScoreMatrix sm;
  sm.keyword_ids = keyword_ids;
  sm.lower_is_match = false;
  for (const auto& tv : targets) {
    sm.utterance_ids.push_back(tv.utterance_id);
    sm.values.insert(sm.values.end(), tv.y.begin(), tv.y.end());
  }
  return sm;
}

// Text form: a polarity comment, a header row of keyword ids, then one row
// per utterance.  Floats carry 9 significant digits.
inline void save_score_matrix(const ScoreMatrix& sm, const std::filesystem::path& path) {
  std::ofstream os = open_output(path, std::ios::out);
  os << "# polarity: " << (sm.lower_is_match ? "lower-is-match" : "higher-is-match")
     << "\n";
  os << "id";
  for (const auto& kw : sm.keyword_ids) os << '\t' << kw;
  os << '\n';
  char buf[64];
  for (size_t u = 0; u < sm.utterance_ids.size(); ++u) {
    os << sm.utterance_ids[u];
    for (size_t k = 0; k < sm.keyword_ids.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.9g", sm.at(u, k));
      os << '\t' << buf;
    }
    os << '\n';
  }
  if (!os) throw IoError("write failed: " + path.string());
}

inline ScoreMatrix load_score_matrix(const std::filesystem::path& path) {
  std::ifstream is = open_input(path, std::ios::in);
  ScoreMatrix sm;
  std::string line;
  bool header_done = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find("higher-is-match") != std::string::npos) sm.lower_is_match = false;
      continue;
    }
    std::vector<std::string> cells;
    size_t pos = 0;
    while (true) {
      const size_t tab = line.find('\t', pos);
      cells.push_back(line.substr(pos, tab == std::string::npos ? tab : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (!header_done) {
      if (cells.empty() || cells[0] != "id")
        throw DataError("score table header must start with 'id': " + path.string());
      sm.keyword_ids.assign(cells.begin() + 1, cells.end());
      header_done = true;
      continue;
    }
    if (cells.size() != sm.keyword_ids.size() + 1)
      throw DataError("score table row width mismatch: " + path.string());
    sm.utterance_ids.push_back(cells[0]);
    for (size_t k = 1; k < cells.size(); ++k) {
      try {
        sm.values.push_back(std::stod(cells[k]));
      } catch (const std::exception&) {
        throw DataError("bad float '" + cells[k] + "' in " + path.string());
      }
    }
  }
  if (!header_done) throw DataError("empty score table: " + path.string());
  return sm;
}

}  // namespace kws
