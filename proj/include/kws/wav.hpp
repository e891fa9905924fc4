// kws/wav.hpp

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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kws/common.hpp"
#include "kws/io.hpp"

namespace kws {

struct Waveform {
  std::vector<float> samples;  // [-1, 1]
  int sample_rate = 0;
};

// Reads a RIFF/WAVE file.  Only 16-bit mono PCM is accepted; anything else
// is rejected rather than resampled or downmixed.  Samples are scaled to
// [-1, 1) by dividing by 32768.
inline Waveform load_wav(const std::filesystem::path& path) {
  std::ifstream is = open_input(path);

  auto read_tag = [&](char out[4]) {
    is.read(out, 4);
    if (is.gcount() != 4) throw CorruptHeader("truncated WAV: " + path.string());
  };

  char tag[4];
  read_tag(tag);
  if (std::string_view(tag, 4) != "RIFF")
    throw CorruptHeader("missing RIFF tag: " + path.string());
  (void)read_u32le(is);  // RIFF size, unused
  read_tag(tag);
  if (std::string_view(tag, 4) != "WAVE")
    throw CorruptHeader("missing WAVE tag: " + path.string());

  bool have_fmt = false;
  uint16_t audio_format = 0, num_channels = 0, bits_per_sample = 0;
  uint32_t sample_rate = 0;
  Waveform wav;

  while (true) {
    is.read(tag, 4);
    if (is.gcount() == 0) break;  // clean end of chunks
    if (is.gcount() != 4) throw CorruptHeader("truncated chunk header: " + path.string());
    const uint32_t chunk_size = read_u32le(is);
    const std::string_view chunk(tag, 4);

    if (chunk == "fmt ") {
      if (chunk_size < 16) throw CorruptHeader("fmt chunk too small: " + path.string());
      audio_format = read_u16le(is);
      num_channels = read_u16le(is);
      sample_rate = read_u32le(is);
      (void)read_u32le(is);  // byte rate
      (void)read_u16le(is);  // block align
      bits_per_sample = read_u16le(is);
      if (chunk_size > 16) is.seekg(chunk_size - 16, std::ios::cur);
      have_fmt = true;
    } else if (chunk == "data") {
      if (!have_fmt) throw CorruptHeader("data chunk before fmt: " + path.string());
      if (audio_format != 1)
        throw UnsupportedFormat("not PCM (format " + std::to_string(audio_format) + "): " + path.string());
      if (num_channels != 1)
        throw UnsupportedFormat("expected mono, got " + std::to_string(num_channels) + " channels: " + path.string());
      if (bits_per_sample != 16)
        throw UnsupportedFormat("expected 16-bit samples, got " + std::to_string(bits_per_sample) + ": " + path.string());
      const uint32_t n = chunk_size / 2;
      wav.samples.resize(n);
      for (uint32_t i = 0; i < n; ++i) {
        const uint16_t raw = read_u16le(is);
        wav.samples[i] = static_cast<float>(static_cast<int16_t>(raw)) / 32768.0f;
      }
      if (chunk_size % 2) is.seekg(1, std::ios::cur);  // pad byte
    } else {
      // skip unknown chunk (word aligned)
      is.seekg(chunk_size + (chunk_size % 2), std::ios::cur);
      if (!is) throw CorruptHeader("truncated chunk body: " + path.string());
    }
  }

  if (!have_fmt) throw CorruptHeader("no fmt chunk: " + path.string());
  if (sample_rate == 0) throw CorruptHeader("zero sample rate: " + path.string());
  wav.sample_rate = static_cast<int>(sample_rate);
  return wav;
}

// Writes 16-bit mono PCM.  Values are clipped to [-1, 1].
inline void save_wav(const Waveform& wav, const std::filesystem::path& path) {
  std::ofstream os = open_output(path);
  const uint32_t data_bytes = static_cast<uint32_t>(wav.samples.size()) * 2;
  os.write("RIFF", 4);
  write_u32le(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  write_u32le(os, 16);
  write_u16le(os, 1);  // PCM
  write_u16le(os, 1);  // mono
  write_u32le(os, static_cast<uint32_t>(wav.sample_rate));
  write_u32le(os, static_cast<uint32_t>(wav.sample_rate) * 2);
  write_u16le(os, 2);
  write_u16le(os, 16);
  os.write("data", 4);
  write_u32le(os, data_bytes);
  for (float v : wav.samples) {
    float x = v;
    if (x > 1.0f) x = 1.0f;
    if (x < -1.0f) x = -1.0f;
    auto s = static_cast<int16_t>(std::lround(x * 32768.0));
    if (x * 32768.0 >= 32767.0) s = 32767;
    write_u16le(os, static_cast<uint16_t>(s));
  }
  if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace kws
