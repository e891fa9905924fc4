// tests/wav_test.cpp

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

#include "kws/wav.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("kws_wav_test_" + name);
}

void put_u16(std::vector<uint8_t>& b, uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back((v >> 8) & 0xff);
}

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
}

void put_tag(std::vector<uint8_t>& b, const char* tag) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<uint8_t>(tag[i]));
}

// Hand-rolled WAV bytes, independent of the library's writer.
std::vector<uint8_t> wav_bytes(const std::vector<int16_t>& samples,
                               uint32_t rate, uint16_t channels = 1,
                               uint16_t bits = 16, uint16_t format = 1) {
  std::vector<uint8_t> b;
  const uint32_t data_bytes = static_cast<uint32_t>(samples.size()) * 2;
  put_tag(b, "RIFF");
  put_u32(b, 36 + data_bytes);
  put_tag(b, "WAVE");
  put_tag(b, "fmt ");
  put_u32(b, 16);
  put_u16(b, format);
  put_u16(b, channels);
  put_u32(b, rate);
  put_u32(b, rate * channels * bits / 8);
  put_u16(b, channels * bits / 8);
  put_u16(b, bits);
  put_tag(b, "data");
  put_u32(b, data_bytes);
  for (int16_t s : samples) put_u16(b, static_cast<uint16_t>(s));
  return b;
}

fs::path write_bytes(const std::string& name, const std::vector<uint8_t>& bytes) {
  const fs::path p = temp_file(name);
  std::ofstream os(p, std::ios::binary);
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  return p;
}

TEST(WavTest, ZeroSignal) {
  std::vector<int16_t> samples(16000, 0);
  const auto p = write_bytes("zero.wav", wav_bytes(samples, 16000));
  const kws::Waveform w = kws::load_wav(p);
  EXPECT_EQ(w.sample_rate, 16000);
  ASSERT_EQ(w.samples.size(), 16000u);
  for (float v : w.samples) EXPECT_EQ(v, 0.0f);
}

TEST(WavTest, Scaling) {
  const auto p = write_bytes("scale.wav", wav_bytes({16384, -16384, 32767}, 8000));
  const kws::Waveform w = kws::load_wav(p);
  ASSERT_EQ(w.samples.size(), 3u);
  EXPECT_FLOAT_EQ(w.samples[0], 0.5f);
  EXPECT_FLOAT_EQ(w.samples[1], -0.5f);
  EXPECT_FLOAT_EQ(w.samples[2], 32767.0f / 32768.0f);
}

TEST(WavTest, StereoRejected) {
  const auto p = write_bytes("stereo.wav", wav_bytes({0, 0, 0, 0}, 16000, 2));
  EXPECT_THROW(kws::load_wav(p), kws::UnsupportedFormat);
}

TEST(WavTest, EightBitRejected) {
  const auto p = write_bytes("8bit.wav", wav_bytes({0, 0}, 16000, 1, 8));
  EXPECT_THROW(kws::load_wav(p), kws::UnsupportedFormat);
}

TEST(WavTest, NonPcmRejected) {
  const auto p = write_bytes("float.wav", wav_bytes({0, 0}, 16000, 1, 16, 3));
  EXPECT_THROW(kws::load_wav(p), kws::UnsupportedFormat);
}

TEST(WavTest, CorruptHeaderRejected) {
  auto bytes = wav_bytes({1, 2, 3}, 16000);
  bytes[9] = 'X';  // break the WAVE tag
  const auto p = write_bytes("corrupt.wav", bytes);
  EXPECT_THROW(kws::load_wav(p), kws::CorruptHeader);
}

TEST(WavTest, TruncatedFileRejected) {
  auto bytes = wav_bytes({1, 2, 3}, 16000);
  bytes.resize(10);
  const auto p = write_bytes("truncated.wav", bytes);
  EXPECT_THROW(kws::load_wav(p), kws::CorruptHeader);
}

TEST(WavTest, SkipsUnknownChunks) {
  std::vector<uint8_t> b;
  put_tag(b, "RIFF");
  put_u32(b, 0);
  put_tag(b, "WAVE");
  put_tag(b, "junk");
  put_u32(b, 3);  // odd size, exercises the pad byte
  b.push_back(1);
  b.push_back(2);
  b.push_back(3);
  b.push_back(0);
  put_tag(b, "fmt ");
  put_u32(b, 16);
  put_u16(b, 1);
  put_u16(b, 1);
  put_u32(b, 16000);
  put_u32(b, 32000);
  put_u16(b, 2);
  put_u16(b, 16);
  put_tag(b, "data");
  put_u32(b, 2);
  put_u16(b, static_cast<uint16_t>(int16_t{-32768}));
  const auto p = write_bytes("chunks.wav", b);
  const kws::Waveform w = kws::load_wav(p);
  ASSERT_EQ(w.samples.size(), 1u);
  EXPECT_FLOAT_EQ(w.samples[0], -1.0f);
}

TEST(WavTest, SaveLoadRoundTrip) {
  kws::Waveform w;
  w.sample_rate = 16000;
  for (int i = 0; i < 256; ++i)
    w.samples.push_back(static_cast<float>(i - 128) / 128.0f * 0.9f);
  const auto p = temp_file("roundtrip.wav");
  kws::save_wav(w, p);
  const kws::Waveform r = kws::load_wav(p);
  EXPECT_EQ(r.sample_rate, w.sample_rate);
  ASSERT_EQ(r.samples.size(), w.samples.size());
  for (size_t i = 0; i < r.samples.size(); ++i)
    EXPECT_NEAR(r.samples[i], w.samples[i], 1.0f / 32768.0f);
}

}  // namespace
