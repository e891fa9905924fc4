// kws/mfcc.hpp

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
#include <vector>

#include "kws/common.hpp"
#include "kws/feature_matrix.hpp"
#include "kws/fft.hpp"
#include "kws/wav.hpp"

namespace kws {

// MFCC front end.  Pipeline and conventions, fixed for reproducibility:
//   - preemphasis over the whole signal: y[0] = x[0], y[t] = x[t] - k*x[t-1]
//   - framing: frames must lie fully inside the signal (snip edges),
//     T = 1 + floor((n - frame_len) / shift)
//   - Hamming window 0.54 - 0.46*cos(2*pi*i/(N-1))
//   - power spectrum via DFT of size next_pow2(frame_len), one-sided, no 1/N
//   - mel scale 2595*log10(1 + f/700); triangular filters with M+2 boundary
//     points equally spaced in mel between low_freq and high_freq, triangle
//     weights evaluated in Hz at the DFT bin centres
//   - natural log with floor: log(max(e, log_floor))
//   - DCT-II, orthonormal scaling, c0 retained
//   - regression deltas and delta-deltas stacked to 3*num_cepstra dims
struct MfccConfig {
  int sample_rate = 16000;
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  int num_mel_filters = 26;
  int num_cepstra = 13;
  double low_freq = 20.0;
  double high_freq = 7800.0;
  double preemphasis = 0.97;
  int delta_window = 2;
  double log_floor = 1e-10;
  // Optional per-utterance, per-dimension mean subtraction of the final
  // stacked features.  Off by default; it changes DTW costs, so runs must
  // ask for it explicitly.
  bool mean_subtract = false;

  int frame_length() const {
    return static_cast<int>(std::lround(frame_length_ms * sample_rate / 1000.0));
  }
  int frame_shift() const {
    return static_cast<int>(std::lround(frame_shift_ms * sample_rate / 1000.0));
  }

  void validate() const {
    if (sample_rate <= 0) throw InvalidConfig("mfcc: sample_rate must be positive");
    if (!(0.0 < low_freq && low_freq < high_freq && high_freq <= sample_rate / 2.0))
      throw InvalidConfig("mfcc: need 0 < low_freq < high_freq <= sample_rate/2");
    if (num_cepstra > num_mel_filters)
      throw InvalidConfig("mfcc: num_cepstra must not exceed num_mel_filters");
    if (num_cepstra < 1 || num_mel_filters < 1)
      throw InvalidConfig("mfcc: filter and cepstra counts must be positive");
    if (frame_shift() > frame_length() || frame_shift() < 1)
      throw InvalidConfig("mfcc: need 0 < frame_shift <= frame_length");
    if (delta_window < 1) throw InvalidConfig("mfcc: delta_window must be >= 1");
  }
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// M x (nfft/2+1) triangular filter weights.
inline std::vector<std::vector<double>> mel_filter_weights(const MfccConfig& cfg,
                                                           int nfft) {
  const int num_bins = nfft / 2 + 1;
  const double mel_lo = hz_to_mel(cfg.low_freq);
  const double mel_hi = hz_to_mel(cfg.high_freq);
  // M+2 boundary points, equally spaced in mel.
  std::vector<double> hz_points(static_cast<size_t>(cfg.num_mel_filters) + 2);
  for (size_t i = 0; i < hz_points.size(); ++i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                    (cfg.num_mel_filters + 1);
    hz_points[i] = mel_to_hz(mel);
  }
  std::vector<std::vector<double>> weights(
      static_cast<size_t>(cfg.num_mel_filters),
      std::vector<double>(static_cast<size_t>(num_bins), 0.0));
  for (int m = 0; m < cfg.num_mel_filters; ++m) {
    const double left = hz_points[static_cast<size_t>(m)];
    const double centre = hz_points[static_cast<size_t>(m) + 1];
    const double right = hz_points[static_cast<size_t>(m) + 2];
    for (int k = 0; k < num_bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / nfft;
      double w = 0.0;
      if (f > left && f < centre) {
        w = (f - left) / (centre - left);
      } else if (f >= centre && f < right) {
        w = (right - f) / (right - centre);
      }
      weights[static_cast<size_t>(m)][static_cast<size_t>(k)] = w;
    }
  }
  return weights;
}

inline std::vector<double> hamming_window(int n) {
  std::vector<double> w(static_cast<size_t>(n));
  const double kPi = 3.14159265358979323846;
  for (int i = 0; i < n; ++i) {
    w[static_cast<size_t>(i)] = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (n - 1));
  }
  return w;
}

inline std::vector<double> preemphasize(const std::vector<float>& x, double coef) {
  std::vector<double> y(x.size());
  if (x.empty()) return y;
  y[0] = x[0];
  for (size_t t = 1; t < x.size(); ++t) y[t] = x[t] - coef * x[t - 1];
  return y;
}

// T x num_mel_filters log mel-filterbank energies (natural log, floored).
inline std::vector<std::vector<double>> log_mel(const Waveform& w,
                                                const MfccConfig& cfg) {
  cfg.validate();
  if (w.sample_rate != cfg.sample_rate) {
    throw RateMismatch("waveform rate " + std::to_string(w.sample_rate) +
                       " != config rate " + std::to_string(cfg.sample_rate));
  }
  const int frame_len = cfg.frame_length();
  const int shift = cfg.frame_shift();
  const auto n = static_cast<int>(w.samples.size());
  if (n < frame_len) {
    throw TooShort("waveform of " + std::to_string(n) +
                   " samples is shorter than one frame (" +
                   std::to_string(frame_len) + ")");
  }
  const int num_frames = 1 + (n - frame_len) / shift;
  const int nfft = next_pow2(frame_len);

  const std::vector<double> pre = preemphasize(w.samples, cfg.preemphasis);
  const std::vector<double> window = hamming_window(frame_len);
  const auto filters = mel_filter_weights(cfg, nfft);

  std::vector<std::vector<double>> out(
      static_cast<size_t>(num_frames),
      std::vector<double>(static_cast<size_t>(cfg.num_mel_filters)));
  std::vector<double> frame(static_cast<size_t>(frame_len));
  for (int t = 0; t < num_frames; ++t) {
    const int start = t * shift;
    for (int i = 0; i < frame_len; ++i) {
      frame[static_cast<size_t>(i)] =
          pre[static_cast<size_t>(start + i)] * window[static_cast<size_t>(i)];
    }
    const std::vector<double> power = power_spectrum(frame, nfft);
    for (int m = 0; m < cfg.num_mel_filters; ++m) {
      double e = 0.0;
      const auto& fw = filters[static_cast<size_t>(m)];
      for (size_t k = 0; k < power.size(); ++k) e += fw[k] * power[k];
      out[static_cast<size_t>(t)][static_cast<size_t>(m)] =
          std::log(std::max(e, cfg.log_floor));
    }
  }
  return out;
}

// Orthonormal DCT-II of one row.
inline std::vector<double> dct2_ortho(const std::vector<double>& x, int num_out) {
  const auto m_count = static_cast<int>(x.size());
  const double kPi = 3.14159265358979323846;
  std::vector<double> c(static_cast<size_t>(num_out), 0.0);
  for (int k = 0; k < num_out; ++k) {
    double acc = 0.0;
    for (int m = 0; m < m_count; ++m) {
      acc += x[static_cast<size_t>(m)] *
             std::cos(kPi * k * (2.0 * m + 1.0) / (2.0 * m_count));
    }
    const double scale = (k == 0) ? std::sqrt(1.0 / m_count) : std::sqrt(2.0 / m_count);
    c[static_cast<size_t>(k)] = scale * acc;
  }
  return c;
}

// Regression deltas: d[t] = sum_n n*(m[t+n]-m[t-n]) / (2*sum_n n^2), with
// out-of-range frames replicated from the edges.
inline std::vector<std::vector<double>> compute_deltas_rows(
    const std::vector<std::vector<double>>& m, int window) {
  if (window < 1) throw InvalidConfig("delta window must be >= 1");
  const auto num_frames = static_cast<int>(m.size());
  std::vector<std::vector<double>> out(m.size());
  double denom = 0.0;
  for (int n = 1; n <= window; ++n) denom += static_cast<double>(n) * n;
  denom *= 2.0;
  for (int t = 0; t < num_frames; ++t) {
    const auto dim = m[static_cast<size_t>(t)].size();
    out[static_cast<size_t>(t)].resize(dim);
    for (size_t d = 0; d < dim; ++d) {
      double acc = 0.0;
      for (int n = 1; n <= window; ++n) {
        const int fwd = std::min(t + n, num_frames - 1);
        const int bwd = std::max(t - n, 0);
        acc += n * (m[static_cast<size_t>(fwd)][d] - m[static_cast<size_t>(bwd)][d]);
      }
      out[static_cast<size_t>(t)][d] = acc / denom;
    }
  }
  return out;
}

inline FeatureMatrix compute_deltas(const FeatureMatrix& m, int window) {
  std::vector<std::vector<double>> rows(static_cast<size_t>(m.num_frames));
  for (int t = 0; t < m.num_frames; ++t) {
    const auto r = m.row(t);
    rows[static_cast<size_t>(t)].assign(r.begin(), r.end());
  }
  const auto deltas = compute_deltas_rows(rows, window);
  FeatureMatrix out(m.num_frames, m.dim, m.kind, m.frame_shift_ms);
  for (int t = 0; t < m.num_frames; ++t)
    for (int d = 0; d < m.dim; ++d)
      out.at(t, d) = static_cast<float>(deltas[static_cast<size_t>(t)][static_cast<size_t>(d)]);
  return out;
}

// Double-precision MFCC pipeline: T rows of 3*num_cepstra values (statics,
// deltas, delta-deltas).
inline std::vector<std::vector<double>> mfcc_frames(const Waveform& w,
                                                    const MfccConfig& cfg) {
  const auto logmel = log_mel(w, cfg);
  const auto num_frames = logmel.size();

  std::vector<std::vector<double>> statics(num_frames);
  for (size_t t = 0; t < num_frames; ++t)
    statics[t] = dct2_ortho(logmel[t], cfg.num_cepstra);

  const auto delta = compute_deltas_rows(statics, cfg.delta_window);
  const auto delta2 = compute_deltas_rows(delta, cfg.delta_window);

  std::vector<std::vector<double>> out(num_frames);
  for (size_t t = 0; t < num_frames; ++t) {
    out[t].reserve(3 * static_cast<size_t>(cfg.num_cepstra));
    out[t].insert(out[t].end(), statics[t].begin(), statics[t].end());
    out[t].insert(out[t].end(), delta[t].begin(), delta[t].end());
    out[t].insert(out[t].end(), delta2[t].begin(), delta2[t].end());
  }

  if (cfg.mean_subtract) {
    const size_t dim = out[0].size();
    for (size_t d = 0; d < dim; ++d) {
      double mean = 0.0;
      for (const auto& row : out) mean += row[d];
      mean /= static_cast<double>(num_frames);
      for (auto& row : out) row[d] -= mean;
    }
  }
  return out;
}

// Full 3*num_cepstra-dimensional MFCC features.
inline FeatureMatrix mfcc(const Waveform& w, const MfccConfig& cfg) {
  const auto rows = mfcc_frames(w, cfg);
  FeatureMatrix out(static_cast<int>(rows.size()), 3 * cfg.num_cepstra,
                    FeatureKind::mfcc39, static_cast<float>(cfg.frame_shift_ms));
  for (int t = 0; t < out.num_frames; ++t)
    for (int d = 0; d < out.dim; ++d)
      out.at(t, d) = static_cast<float>(rows[static_cast<size_t>(t)][static_cast<size_t>(d)]);
  return out;
}

}  // namespace kws
