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

// Corpus-level evaluation: pairing reference/generated files, scoring every
// pair, aggregating, and writing details.csv / summary.json.

#ifndef VCEVAL_PIPELINE_HPP_
#define VCEVAL_PIPELINE_HPP_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vceval/embedding.hpp"
#include "vceval/features.hpp"
#include "vceval/similarity.hpp"

namespace vceval {

// ---- emotions --------------------------------------------------------------

enum class Emotion { kAnger, kDisgust, kFear, kHappiness, kNeutral, kSadness, kUnknown };

std::string_view emotion_name(Emotion e);
std::optional<Emotion> parse_emotion_name(std::string_view name);

// Lower-cased filename token -> canonical emotion.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::map<std::string, Emotion> aliases);

  // Full words plus CREMA-D style three-letter codes.
  static AliasTable defaults();
  // JSON object {"token": "canonical label", ...}; throws ParseError.
  static AliasTable from_json(std::string_view text);
  static AliasTable from_file(const std::filesystem::path& path);

  std::optional<Emotion> lookup(std::string_view token) const;
  std::size_t size() const { return aliases_.size(); }

 private:
  std::map<std::string, Emotion, std::less<>> aliases_;
};

// Splits the stem on '_', '-' and '.'; the first token found in the table
// (left to right) decides the label.
Emotion parse_emotion(std::string_view stem, const AliasTable& table);

// ---- pairing ---------------------------------------------------------------

struct PairPaths {
  std::string stem;
  std::filesystem::path reference;
  std::filesystem::path generated;
};

struct Discovery {
  std::vector<PairPaths> pairs;  // sorted by stem
  std::vector<std::string> unmatched_reference;
  std::vector<std::string> unmatched_generated;
};

// Non-recursive, case-sensitive match of *.wav files by stem. Throws IoError
// for unreadable directories and NoPairs for an empty intersection.
Discovery discover_pairs(const std::filesystem::path& reference_dir,
                         const std::filesystem::path& generated_dir);

// ---- evaluation ------------------------------------------------------------

struct EvalConfig {
  FrameParams frame;
  std::vector<FeatureId> features{kAllFeatures.begin(), kAllFeatures.end()};
  // Both null disables the embedding metric. Model mode passes the same
  // backend twice.
  std::shared_ptr<Backend> reference_backend;
  std::shared_ptr<Backend> generated_backend;
  bool parse_emotions = true;
  AliasTable aliases = AliasTable::defaults();
  std::size_t workers = 1;
  // Optional debug dump of every FeatureSummary, one JSON file per side.
  std::optional<std::filesystem::path> feature_dump_dir;
  // Called from worker threads after each pair.
  std::function<void(std::size_t done, std::size_t total)> progress;

  bool embeddings_enabled() const { return reference_backend != nullptr; }
  // "embedding" (when enabled) followed by the feature names in report order.
  std::vector<std::string> metric_names() const;
};

// Scores are rounded to the 6 decimals written to details.csv so that the
// two report files agree exactly.
double quantize_score(double v);

// One record per pair, sorted by pair_id; failures carry `error` instead of
// scores. Output does not depend on config.workers. Throws Error when every
// pair fails.
std::vector<PairRecord> evaluate_corpus(const std::vector<PairPaths>& pairs,
                                        const EvalConfig& config);

// ---- aggregation and reports -----------------------------------------------

struct RunFingerprint {
  int sample_rate = kCanonicalRate;
  std::size_t n_fft = 1024;
  std::size_t hop = 256;
  std::string window = "hann";
  std::string padding = "center-reflect";
  std::string backend = "none";
  std::optional<std::size_t> embedding_dim;
  std::vector<std::string> metrics;
  std::string emotions = "auto";

  bool operator==(const RunFingerprint&) const = default;
};

struct PairFailure {
  std::string pair_id;
  std::string message;

  bool operator==(const PairFailure&) const = default;
};

struct SummaryReport {
  RunFingerprint config;
  std::map<std::string, double> overall;
  std::map<std::string, std::map<std::string, double>> by_emotion;
  // Mean of the per-emotion means over labelled emotions (unknown excluded).
  std::map<std::string, double> emotion_average;
  std::map<std::string, std::size_t> counts;
  std::size_t pair_count = 0;
  std::vector<PairFailure> failures;
  std::vector<std::string> unmatched_reference;
  std::vector<std::string> unmatched_generated;

  bool operator==(const SummaryReport&) const = default;
};

// Means over successful records; failed records become `failures`. Throws
// EmptyInput when no record succeeded.
SummaryReport aggregate(const std::vector<PairRecord>& records);

// Call after evaluation: a model's embedding width may only be known then.
RunFingerprint make_fingerprint(const EvalConfig& config);

std::string summary_to_json(const SummaryReport& summary);
SummaryReport summary_from_json(std::string_view text);

// Fixed column order, 6-decimal fixed point, LF endings.
std::string details_to_csv(const std::vector<PairRecord>& records,
                           const std::vector<std::string>& metrics);

// Writes details.csv and summary.json; throws IoError.
void write_reports(const std::vector<PairRecord>& records, const SummaryReport& summary,
                   const std::filesystem::path& out_dir);

}  // namespace vceval

#endif  // VCEVAL_PIPELINE_HPP_
