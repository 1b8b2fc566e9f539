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

#ifndef VCEVAL_SIMILARITY_HPP_
#define VCEVAL_SIMILARITY_HPP_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vceval/features.hpp"

namespace vceval {

enum class NormFlag { kNone, kBothZero, kOneZero };

struct CosineResult {
  double value = 0.0;
  NormFlag flag = NormFlag::kNone;
};

// Clamped cosine similarity. Both norms zero -> 1, one norm zero -> 0; either
// case is reported through `flag`. Throws LengthMismatch.
CosineResult cosine_checked(std::span<const double> u, std::span<const double> v);
double cosine(std::span<const double> u, std::span<const double> v);

// Metric column names: "embedding" plus the feature names.
inline constexpr std::string_view kEmbeddingMetric = "embedding";

// Everything extracted from one side of a pair.
struct SideAnalysis {
  std::optional<std::vector<double>> embedding;
  std::map<FeatureId, FeatureSummary> features;
};

struct PairRecord {
  std::string pair_id;
  std::string reference_file;
  std::string generated_file;
  std::string emotion = "unknown";
  std::map<std::string, double> scores;
  // metric -> "zero_norm_both" / "zero_norm_one"; only flagged metrics appear.
  std::map<std::string, std::string> flags;
  std::optional<std::string> error;

  bool ok() const { return !error.has_value(); }
};

// One score per metric present on both sides. Throws LengthMismatch when the
// two sides disagree on a vector's length, and Error when a metric is
// present on only one side.
PairRecord score_pair(const SideAnalysis& reference, const SideAnalysis& generated);

std::string_view flag_name(NormFlag flag);

}  // namespace vceval

#endif  // VCEVAL_SIMILARITY_HPP_
