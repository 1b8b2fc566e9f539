// Copyright (c) 2026 vceval authors
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

#include "vceval/prompts.hpp"

#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "vceval/errors.hpp"

namespace vceval {

namespace {

// Unbiased draw from [0, bound) by rejection. std::uniform_int_distribution
// is implementation-defined, which would tie assignments to one stdlib.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

std::vector<PromptAssignment> make_prompt_assignments(std::span<const ManifestEntry> manifest,
                                                      std::uint64_t seed) {
  if (manifest.size() < 2) {
    throw TooFewSamples("prompt drawing needs at least 2 samples, got " +
                        std::to_string(manifest.size()));
  }
  std::set<std::string_view> ids;
  for (const auto& e : manifest) {
    if (e.text.empty()) throw ParseError("empty text for sample '" + e.sample_id + "'");
    if (!ids.insert(e.sample_id).second) throw ParseError("duplicate sample id '" + e.sample_id + "'");
  }

  std::mt19937_64 rng(seed);
  const std::uint64_t n = manifest.size();
  std::vector<PromptAssignment> out;
  out.reserve(manifest.size());
  for (std::uint64_t i = 0; i < n; ++i) {
    // Draw among the n-1 other samples, then skip over i.
    std::uint64_t j = bounded(rng, n - 1);
    if (j >= i) ++j;
    out.push_back({manifest[i].sample_id, manifest[j].text, manifest[j].sample_id});
  }
  return out;
}

std::vector<ManifestEntry> parse_manifest_tsv(std::string_view text) {
  std::vector<ManifestEntry> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) {
      throw ParseError("manifest line " + std::to_string(line_no) + ": expected sample_id<TAB>text");
    }
    out.push_back({std::string(line.substr(0, tab)), std::string(line.substr(tab + 1))});
  }
  return out;
}

std::vector<ManifestEntry> read_manifest_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest_tsv(ss.str());
}

std::string assignments_to_tsv(std::span<const PromptAssignment> assignments) {
  std::string out;
  for (const auto& a : assignments) {
    out += a.sample_id;
    out += '\t';
    out += a.source_sample_id;
    out += '\t';
    out += a.assigned_text;
    out += '\n';
  }
  return out;
}

}  // namespace vceval
