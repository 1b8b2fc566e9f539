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

#include "vceval/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "vceval/errors.hpp"

namespace vceval {

namespace {

struct Sums {
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
};

Sums accumulate(std::span<const double> u, std::span<const double> v, double su, double sv) {
  Sums s;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u[i] / su;
    const double b = v[i] / sv;
    s.dot += a * b;
    s.uu += a * a;
    s.vv += b * b;
  }
  return s;
}

double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

CosineResult cosine_checked(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw LengthMismatch("cosine of vectors with lengths " + std::to_string(u.size()) +
                         " and " + std::to_string(v.size()));
  }
  Sums s = accumulate(u, v, 1.0, 1.0);
  // sqrt(fl(a * a)) == a in round-to-nearest, so cosine(u, u) is exactly 1
  // on this path. Sums that overflow or underflow are redone on vectors
  // scaled to unit max-norm.
  if (!std::isnormal(s.uu) || !std::isnormal(s.vv) || !std::isnormal(s.uu * s.vv) ||
      !std::isfinite(s.dot)) {
    const double mu = max_abs(u);
    const double mv = max_abs(v);
    if (mu == 0.0 && mv == 0.0) return {1.0, NormFlag::kBothZero};
    if (mu == 0.0 || mv == 0.0) return {0.0, NormFlag::kOneZero};
    s = accumulate(u, v, mu, mv);
  }
  const double value = s.dot / std::sqrt(s.uu * s.vv);
  return {std::clamp(value, -1.0, 1.0), NormFlag::kNone};
}

double cosine(std::span<const double> u, std::span<const double> v) {
  return cosine_checked(u, v).value;
}

std::string_view flag_name(NormFlag flag) {
  switch (flag) {
    case NormFlag::kNone: return "";
    case NormFlag::kBothZero: return "zero_norm_both";
    case NormFlag::kOneZero: return "zero_norm_one";
  }
  return "";
}

PairRecord score_pair(const SideAnalysis& reference, const SideAnalysis& generated) {
  PairRecord rec;
  const auto put = [&rec](std::string metric, const CosineResult& r) {
    if (r.flag != NormFlag::kNone) rec.flags[metric] = std::string(flag_name(r.flag));
    rec.scores[std::move(metric)] = r.value;
  };

  if (reference.embedding.has_value() != generated.embedding.has_value()) {
    throw Error("embedding present on only one side of the pair");
  }
  if (reference.embedding) {
    put(std::string(kEmbeddingMetric), cosine_checked(*reference.embedding, *generated.embedding));
  }

  if (reference.features.size() != generated.features.size()) {
    throw Error("feature sets differ between reference and generated side");
  }
  for (const auto& [id, ref_summary] : reference.features) {
    const auto it = generated.features.find(id);
    if (it == generated.features.end()) {
      throw Error("feature " + std::string(feature_name(id)) + " missing on generated side");
    }
    put(std::string(feature_name(id)), cosine_checked(ref_summary.vector, it->second.vector));
  }
  return rec;
}

}  // namespace vceval
