// kws/manifest.hpp

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
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kws/common.hpp"
#include "kws/io.hpp"

namespace kws {

enum class Split { train, dev, test };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  throw DataError("unknown split '" + s + "'");
}

struct ManifestEntry {
  std::string id;
  std::string path;  // relative to the manifest file's directory
  Split split = Split::train;
  // Keywords known to occur; required for dev/test entries that feed
  // evaluation, absent for untranscribed training audio.
  std::optional<std::set<std::string>> transcript_keywords;
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> split_entries(Split s) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries)
      if (e.split == s) out.push_back(&e);
    return out;
  }
};

// Ordered keyword inventory.  The lexicographic keyword order fixes the
// column order of every score matrix and target vector in a run.
struct KeywordSet {
  std::vector<std::string> keywords;
  std::map<std::string, std::vector<std::string>> exemplars;

  void validate() const {
    if (keywords.empty()) throw DataError("keyword set is empty");
    if (!std::is_sorted(keywords.begin(), keywords.end()))
      throw DataError("keyword ids must be in lexicographic order");
    for (const auto& kw : keywords) {
      const auto it = exemplars.find(kw);
      if (it == exemplars.end() || it->second.empty())
        throw DataError("keyword " + kw + " has no exemplars");
    }
  }
};

struct Occurrence {
  std::string utterance_id;
  std::string keyword_id;
  int start_frame = 0;
  int end_frame = 0;  // exclusive
};

using GroundTruth = std::vector<Occurrence>;

// utterance id -> set of keywords present
inline std::map<std::string, std::set<std::string>> truth_by_utterance(
    const GroundTruth& gt) {
  std::map<std::string, std::set<std::string>> out;
  for (const auto& occ : gt) out[occ.utterance_id].insert(occ.keyword_id);
  return out;
}

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cells;
  size_t pos = 0;
  while (true) {
    const size_t tab = line.find('\t', pos);
    cells.push_back(line.substr(pos, tab == std::string::npos ? tab : tab - pos));
    if (tab == std::string::npos) break;
    pos = tab + 1;
  }
  return cells;
}

inline std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  size_t pos = 0;
  while (true) {
    const size_t c = s.find(',', pos);
    out.push_back(s.substr(pos, c == std::string::npos ? c : c - pos));
    if (c == std::string::npos) break;
    pos = c + 1;
  }
  return out;
}

}  // namespace detail

// Manifest file: one entry per line, tab-separated:
//   id <TAB> relative-path <TAB> split <TAB> comma-separated keyword ids
// The last field may be empty.  For train entries an empty field means
// untranscribed; for dev/test it means a transcript with no keywords.
inline void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream os = open_output(path, std::ios::out);
  for (const auto& e : m.entries) {
    os << e.id << '\t' << e.path << '\t' << split_name(e.split) << '\t';
    if (e.transcript_keywords) {
      bool first = true;
      for (const auto& kw : *e.transcript_keywords) {
        if (!first) os << ',';
        os << kw;
        first = false;
      }
    }
    os << '\n';
  }
  if (!os) throw IoError("write failed: " + path.string());
}

inline Manifest load_manifest(const std::filesystem::path& path,
                              bool check_paths = true) {
  std::ifstream is = open_input(path, std::ios::in);
  Manifest m;
  std::set<std::string> seen;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = detail::split_tabs(line);
    if (cells.size() < 3 || cells.size() > 4)
      throw DataError("manifest line needs 3 or 4 fields: " + line);
    ManifestEntry e;
    e.id = cells[0];
    e.path = cells[1];
    e.split = parse_split(cells[2]);
    if (cells.size() == 4 && !cells[3].empty()) {
      std::set<std::string> kws;
      for (auto& kw : detail::split_commas(cells[3])) kws.insert(kw);
      e.transcript_keywords = std::move(kws);
    } else if (e.split != Split::train) {
      e.transcript_keywords = std::set<std::string>{};
    }
    if (!seen.insert(e.id).second)
      throw DataError("duplicate manifest id " + e.id);
    if (check_paths) {
      const auto resolved = path.parent_path() / e.path;
      if (!std::filesystem::exists(resolved))
        throw MissingInput("manifest path not resolvable: " + resolved.string());
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

// Ground-truth sidecar: utterance id, keyword id, start frame, end frame
// (exclusive), tab-separated.
inline void save_ground_truth(const GroundTruth& gt,
                              const std::filesystem::path& path) {
  std::ofstream os = open_output(path, std::ios::out);
  for (const auto& occ : gt) {
    os << occ.utterance_id << '\t' << occ.keyword_id << '\t' << occ.start_frame
       << '\t' << occ.end_frame << '\n';
  }
  if (!os) throw IoError("write failed: " + path.string());
}

inline GroundTruth load_ground_truth(const std::filesystem::path& path) {
  std::ifstream is = open_input(path, std::ios::in);
  GroundTruth gt;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = detail::split_tabs(line);
    if (cells.size() != 4)
      throw DataError("ground-truth line needs 4 fields: " + line);
    Occurrence occ;
    occ.utterance_id = cells[0];
    occ.keyword_id = cells[1];
    occ.start_frame = std::stoi(cells[2]);
    occ.end_frame = std::stoi(cells[3]);
    gt.push_back(std::move(occ));
  }
  return gt;
}

// Keyword inventory file: keyword id, comma-separated exemplar ids.
inline void save_keyword_set(const KeywordSet& ks,
                             const std::filesystem::path& path) {
  std::ofstream os = open_output(path, std::ios::out);
  for (const auto& kw : ks.keywords) {
    os << kw << '\t';
    const auto& exs = ks.exemplars.at(kw);
    for (size_t i = 0; i < exs.size(); ++i) {
      if (i) os << ',';
      os << exs[i];
    }
    os << '\n';
  }
  if (!os) throw IoError("write failed: " + path.string());
}

inline KeywordSet load_keyword_set(const std::filesystem::path& path) {
  std::ifstream is = open_input(path, std::ios::in);
  KeywordSet ks;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = detail::split_tabs(line);
    if (cells.size() != 2) throw DataError("keyword line needs 2 fields: " + line);
    ks.keywords.push_back(cells[0]);
    ks.exemplars[cells[0]] = detail::split_commas(cells[1]);
  }
  std::sort(ks.keywords.begin(), ks.keywords.end());
  ks.validate();
  return ks;
}

}  // namespace kws
