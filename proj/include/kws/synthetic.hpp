// kws/synthetic.hpp

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

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kws/common.hpp"
#include "kws/feature_matrix.hpp"
#include "kws/manifest.hpp"
#include "kws/rng.hpp"

namespace kws {

// Seeded synthetic corpus generator.  Works directly in feature space: each
// keyword is a fixed smooth prototype trajectory; exemplars and in-utterance
// occurrences are time-warped, noise-perturbed copies; everything else is
// stationary background noise.  Generation is a pure function of the spec,
// so a given spec+seed always reproduces byte-identical archives.
struct SyntheticSpec {
  int num_keywords = 10;
  int exemplars_per_keyword = 6;
  int num_train_utterances = 300;
  int num_dev_utterances = 100;
  int num_test_utterances = 100;
  int utterance_min_frames = 80;
  int utterance_max_frames = 120;
  int keyword_min_frames = 16;
  int keyword_max_frames = 24;
  double keyword_occurrence_probability = 0.25;
  double warp_min = 0.8;
  double warp_max = 1.25;
  double noise_sigma = 0.3;
  int feature_dim = 12;
  uint64_t seed = 0;

  void validate() const {
    if (num_keywords < 1) throw InvalidSpec("synth: num_keywords must be >= 1");
    if (exemplars_per_keyword < 1)
      throw InvalidSpec("synth: exemplars_per_keyword must be >= 1");
    if (num_train_utterances < 0 || num_dev_utterances < 0 || num_test_utterances < 0)
      throw InvalidSpec("synth: utterance counts must be >= 0");
    if (utterance_min_frames < 1 || utterance_max_frames < utterance_min_frames)
      throw InvalidSpec("synth: bad utterance length range");
    if (keyword_min_frames < 2 || keyword_max_frames < keyword_min_frames)
      throw InvalidSpec("synth: bad keyword length range");
    if (!(keyword_occurrence_probability >= 0.0 &&
          keyword_occurrence_probability <= 1.0))
      throw InvalidSpec("synth: occurrence probability must be in [0,1]");
    if (!(0.5 <= warp_min && warp_min <= warp_max && warp_max <= 2.0))
      throw InvalidSpec("synth: warp range must lie within [0.5, 2.0]");
    if (noise_sigma < 0.0) throw InvalidSpec("synth: noise_sigma must be >= 0");
    if (feature_dim < 1) throw InvalidSpec("synth: feature_dim must be >= 1");
  }
};

struct SyntheticCorpus {
  KeywordSet keyword_set;
  Manifest manifest;
  GroundTruth ground_truth;
  FeatureMap exemplar_features;
  std::map<Split, FeatureMap> utterance_features;
};

namespace detail {

inline std::string zero_pad(int v, int width) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%0*d", width, v);
  return buf;
}

// Linear time interpolation of a trajectory to a new length.
inline FeatureMatrix time_warp(const FeatureMatrix& proto, int new_len) {
  FeatureMatrix out(new_len, proto.dim, proto.kind, proto.frame_shift_ms);
  if (new_len == 1) {
    for (int d = 0; d < proto.dim; ++d) out.at(0, d) = proto.at(0, d);
    return out;
  }
  for (int t = 0; t < new_len; ++t) {
    const double x = static_cast<double>(t) * (proto.num_frames - 1) / (new_len - 1);
    const int i0 = static_cast<int>(x);
    const int i1 = std::min(i0 + 1, proto.num_frames - 1);
    const double frac = x - i0;
    for (int d = 0; d < proto.dim; ++d) {
      out.at(t, d) = static_cast<float>((1.0 - frac) * proto.at(i0, d) +
                                        frac * proto.at(i1, d));
    }
  }
  return out;
}

// Smooth random trajectory: anchor frames drawn i.i.d. and linearly
// interpolated, giving each keyword a distinctive path through feature
// space that survives warping and additive noise.
inline FeatureMatrix make_prototype(int len, int dim, Rng& rng) {
  const int num_anchors = 4;
  FeatureMatrix anchors(num_anchors, dim);
  for (int a = 0; a < num_anchors; ++a)
    for (int d = 0; d < dim; ++d)
      anchors.at(a, d) = static_cast<float>(rng.gaussian() * 2.0);
  return time_warp(anchors, len);
}

inline FeatureMatrix corrupt(const FeatureMatrix& m, double sigma, Rng& rng) {
  FeatureMatrix out = m;
  for (auto& v : out.data) v = static_cast<float>(v + rng.gaussian() * sigma);
  return out;
}

}  // namespace detail

// Generates the corpus described by the spec.  Keyword ids are kw00..,
// exemplar ids kwXX_exYY, utterance ids <split>_NNNN; archives keyed by
// those ids.  The ground truth records every spliced occurrence with its
// frame span.  Occurrences never overlap; if no free slot remains for a
// drawn occurrence it is skipped (and not recorded).
inline SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng root(spec.seed);
  Rng proto_rng = root.substream("prototypes");
  Rng exemplar_rng = root.substream("exemplars");
  Rng utterance_rng = root.substream("utterances");

  SyntheticCorpus corpus;
  const int kw_width = spec.num_keywords > 100 ? 3 : 2;

  // prototypes
  std::map<std::string, FeatureMatrix> prototypes;
  for (int k = 0; k < spec.num_keywords; ++k) {
    const std::string kw_id = "kw" + detail::zero_pad(k, kw_width);
    const int len = static_cast<int>(
        proto_rng.range(spec.keyword_min_frames, spec.keyword_max_frames));
    prototypes.emplace(kw_id, detail::make_prototype(len, spec.feature_dim, proto_rng));
    corpus.keyword_set.keywords.push_back(kw_id);
  }

  // exemplars: warped + perturbed prototype copies
  for (const auto& kw_id : corpus.keyword_set.keywords) {
    const FeatureMatrix& proto = prototypes.at(kw_id);
    for (int e = 0; e < spec.exemplars_per_keyword; ++e) {
      const std::string ex_id = kw_id + "_ex" + detail::zero_pad(e, 2);
      const double factor = exemplar_rng.uniform(spec.warp_min, spec.warp_max);
      const int len = std::max(2, static_cast<int>(std::lround(factor * proto.num_frames)));
      FeatureMatrix ex = detail::time_warp(proto, len);
      ex = detail::corrupt(ex, spec.noise_sigma, exemplar_rng);
      corpus.exemplar_features.emplace(ex_id, std::move(ex));
      corpus.keyword_set.exemplars[kw_id].push_back(ex_id);
    }
  }

  // utterances per split
  const std::array<std::pair<Split, int>, 3> split_counts = {{
      {Split::train, spec.num_train_utterances},
      {Split::dev, spec.num_dev_utterances},
      {Split::test, spec.num_test_utterances},
  }};
  for (const auto& [split, count] : split_counts) {
    FeatureMap& feats = corpus.utterance_features[split];
    for (int u = 0; u < count; ++u) {
      const std::string utt_id =
          std::string(split_name(split)) + "_" + detail::zero_pad(u, 4);
      const int len = static_cast<int>(
          utterance_rng.range(spec.utterance_min_frames, spec.utterance_max_frames));
      FeatureMatrix utt(len, spec.feature_dim);
      for (auto& v : utt.data) v = static_cast<float>(utterance_rng.gaussian());

      std::vector<std::pair<int, int>> occupied;  // [start, end) spans
      std::set<std::string> present;
      for (const auto& kw_id : corpus.keyword_set.keywords) {
        if (utterance_rng.uniform() >= spec.keyword_occurrence_probability) continue;
        const FeatureMatrix& proto = prototypes.at(kw_id);
        const double factor = utterance_rng.uniform(spec.warp_min, spec.warp_max);
        const int occ_len =
            std::max(2, static_cast<int>(std::lround(factor * proto.num_frames)));
        if (occ_len > len) continue;
        // a few placement attempts; skip the occurrence if they all collide
        int start = -1;
        for (int attempt = 0; attempt < 8; ++attempt) {
          const int cand = static_cast<int>(utterance_rng.range(0, len - occ_len));
          bool clash = false;
          for (const auto& [s, e] : occupied) {
            if (cand < e && s < cand + occ_len) {
              clash = true;
              break;
            }
          }
          if (!clash) {
            start = cand;
            break;
          }
        }
        if (start < 0) continue;
        FeatureMatrix occ = detail::time_warp(proto, occ_len);
        occ = detail::corrupt(occ, spec.noise_sigma, utterance_rng);
        for (int t = 0; t < occ_len; ++t)
          for (int d = 0; d < spec.feature_dim; ++d)
            utt.at(start + t, d) = occ.at(t, d);
        occupied.emplace_back(start, start + occ_len);
        present.insert(kw_id);
        corpus.ground_truth.push_back({utt_id, kw_id, start, start + occ_len});
      }

      ManifestEntry entry;
      entry.id = utt_id;
      entry.path = std::string("features_") + split_name(split) + ".qbef";
      entry.split = split;
      if (split != Split::train) entry.transcript_keywords = present;
      corpus.manifest.entries.push_back(std::move(entry));
      feats.emplace(utt_id, std::move(utt));
    }
  }

  corpus.keyword_set.validate();
  return corpus;
}

}  // namespace kws
