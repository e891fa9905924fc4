// kws/archive.hpp

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

#include <filesystem>
#include <map>
#include <string>

#include "kws/feature_matrix.hpp"
#include "kws/io.hpp"

namespace kws {

// QBEF1 feature archive.  Layout, all little-endian:
//   magic "QBEF1\0"
//   u32 record count
//   per record: u16 id length, UTF-8 id bytes, u32 T, u32 D,
//               f32 frame_shift_ms, u8 feature_kind, T*D f32 row-major.
// Floats round-trip bit-exactly.

inline constexpr char kArchiveMagic[6] = {'Q', 'B', 'E', 'F', '1', '\0'};

inline void write_archive(const FeatureMap& records,
                          const std::filesystem::path& path) {
  std::ofstream os = open_output(path);
  os.write(kArchiveMagic, sizeof(kArchiveMagic));
  write_u32le(os, static_cast<uint32_t>(records.size()));
  for (const auto& [id, m] : records) {
    write_string(os, id);
    write_u32le(os, static_cast<uint32_t>(m.num_frames));
    write_u32le(os, static_cast<uint32_t>(m.dim));
    write_f32le(os, m.frame_shift_ms);
    write_u8(os, static_cast<uint8_t>(m.kind));
    for (float v : m.data) write_f32le(os, v);
  }
  if (!os) throw IoError("write failed: " + path.string());
}

inline FeatureMap read_archive(const std::filesystem::path& path) {
  std::ifstream is = open_input(path);
  char magic[6];
  is.read(magic, sizeof(magic));
  if (is.gcount() != sizeof(magic) ||
      !std::equal(magic, magic + 6, kArchiveMagic)) {
    throw BadMagic("not a QBEF1 archive: " + path.string());
  }
  const uint32_t count = read_u32le(is);
  FeatureMap records;
  int expected_dim = -1;
  for (uint32_t i = 0; i < count; ++i) {
    std::string id = read_string(is);
    const auto t = static_cast<int>(read_u32le(is));
    const auto d = static_cast<int>(read_u32le(is));
    const float shift = read_f32le(is);
    const uint8_t kind_byte = read_u8(is);
    if (kind_byte > static_cast<uint8_t>(FeatureKind::imported)) {
      throw IoError("bad feature kind byte in " + path.string());
    }
    if (expected_dim < 0) expected_dim = d;
    if (d != expected_dim) {
      throw DimMismatch("archive records disagree on feature dim: " +
                        std::to_string(expected_dim) + " vs " +
                        std::to_string(d) + " at id " + id);
    }
    FeatureMatrix m(t, d, static_cast<FeatureKind>(kind_byte), shift);
    for (auto& v : m.data) v = read_f32le(is);
    if (!records.emplace(std::move(id), std::move(m)).second) {
      throw IoError("duplicate record id in " + path.string());
    }
  }
  return records;
}

// Import features produced outside the toolkit (e.g. bottleneck features
// from an external extractor).  Records are re-tagged as imported and the
// dimensionality is checked against what the run expects.
inline FeatureMap import_external(const std::filesystem::path& path,
                                  int expected_dim) {
  FeatureMap records = read_archive(path);
  for (auto& [id, m] : records) {
    if (m.dim != expected_dim) {
      throw DimMismatch("imported record " + id + " has dim " +
                        std::to_string(m.dim) + ", expected " +
                        std::to_string(expected_dim));
    }
    m.kind = FeatureKind::imported;
  }
  return records;
}

}  // namespace kws
