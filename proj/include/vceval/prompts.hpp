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

#ifndef VCEVAL_PROMPTS_HPP_
#define VCEVAL_PROMPTS_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vceval {

struct ManifestEntry {
  std::string sample_id;
  std::string text;
};

struct PromptAssignment {
  std::string sample_id;
  std::string assigned_text;
  std::string source_sample_id;

  bool operator==(const PromptAssignment&) const = default;
};

// For every sample, draws the text of a different sample uniformly at random
// from a generator seeded with `seed`. Throws TooFewSamples for fewer than two
// entries and ParseError for duplicate ids or empty texts.
std::vector<PromptAssignment> make_prompt_assignments(std::span<const ManifestEntry> manifest,
                                                      std::uint64_t seed);

// `sample_id<TAB>text` per line; blank lines skipped. Throws ParseError.
std::vector<ManifestEntry> parse_manifest_tsv(std::string_view text);
std::vector<ManifestEntry> read_manifest_tsv(const std::filesystem::path& path);

// `sample_id<TAB>source_sample_id<TAB>text` per line.
std::string assignments_to_tsv(std::span<const PromptAssignment> assignments);

}  // namespace vceval

#endif  // VCEVAL_PROMPTS_HPP_
