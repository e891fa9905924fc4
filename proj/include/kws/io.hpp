// kws/io.hpp

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

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "kws/common.hpp"
#include "kws/rng.hpp"

namespace kws {

// Little-endian primitives, written byte by byte so the on-disk formats do
// not depend on host endianness.

inline void write_u8(std::ostream& os, uint8_t v) {
  os.put(static_cast<char>(v));
}

inline void write_u16le(std::ostream& os, uint16_t v) {
  os.put(static_cast<char>(v & 0xff));
  os.put(static_cast<char>((v >> 8) & 0xff));
}

inline void write_u32le(std::ostream& os, uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void write_u64le(std::ostream& os, uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void write_f32le(std::ostream& os, float v) {
  write_u32le(os, std::bit_cast<uint32_t>(v));
}

inline void write_f64le(std::ostream& os, double v) {
  write_u64le(os, std::bit_cast<uint64_t>(v));
}

inline uint8_t read_u8(std::istream& is) {
  int c = is.get();
  if (c == EOF) throw IoError("unexpected end of file");
  return static_cast<uint8_t>(c);
}

inline uint16_t read_u16le(std::istream& is) {
  uint16_t v = read_u8(is);
  v |= static_cast<uint16_t>(read_u8(is)) << 8;
  return v;
}

inline uint32_t read_u32le(std::istream& is) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(read_u8(is)) << (8 * i);
  return v;
}

inline uint64_t read_u64le(std::istream& is) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(read_u8(is)) << (8 * i);
  return v;
}

inline float read_f32le(std::istream& is) {
  return std::bit_cast<float>(read_u32le(is));
}

inline double read_f64le(std::istream& is) {
  return std::bit_cast<double>(read_u64le(is));
}

inline void write_string(std::ostream& os, const std::string& s) {
  if (s.size() > UINT16_MAX) throw IoError("string too long for container");
  write_u16le(os, static_cast<uint16_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
  const uint16_t n = read_u16le(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (is.gcount() != n) throw IoError("unexpected end of file in string");
  return s;
}

inline std::ofstream open_output(const std::filesystem::path& path,
                                 std::ios::openmode mode = std::ios::binary) {
  std::ofstream os(path, mode);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  return os;
}

inline std::ifstream open_input(const std::filesystem::path& path,
                                std::ios::openmode mode = std::ios::binary) {
  std::ifstream is(path, mode);
  if (!is) throw IoError("cannot open for reading: " + path.string());
  return is;
}

// Non-cryptographic content digest used for run provenance records.
inline uint64_t fnv1a64_bytes(const void* data, size_t n) {
  uint64_t h = 0xcbf29ce484222325ull;
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t file_digest(const std::filesystem::path& path) {
  std::ifstream is = open_input(path);
  uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof(buf));
    const auto got = is.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

inline std::string digest_hex(uint64_t digest) {
  static const char* hex = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<size_t>(i)] = hex[digest & 0xf];
    digest >>= 4;
  }
  return s;
}

}  // namespace kws
