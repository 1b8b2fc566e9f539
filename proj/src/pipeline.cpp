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

#include "vceval/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "vceval/audio_io.hpp"
#include "vceval/errors.hpp"

namespace vceval {

namespace {

using json = nlohmann::json;

constexpr std::array<std::pair<Emotion, std::string_view>, 7> kEmotionNames = {{
    {Emotion::kAnger, "anger"},
    {Emotion::kDisgust, "disgust"},
    {Emotion::kFear, "fear"},
    {Emotion::kHappiness, "happiness"},
    {Emotion::kNeutral, "neutral"},
    {Emotion::kSadness, "sadness"},
    {Emotion::kUnknown, "unknown"},
}};

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_wav(const std::filesystem::path& p) { return lower(p.extension().string()) == ".wav"; }

// Stem -> filename for the *.wav files directly inside `dir`.
std::map<std::string, std::filesystem::path> list_wavs(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (std::filesystem::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
    if (it->is_regular_file(ec) && is_wav(it->path())) files.push_back(it->path());
  }
  if (ec) throw IoError("cannot read directory " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());
  std::map<std::string, std::filesystem::path> out;
  for (auto& f : files) out.emplace(f.stem().string(), std::move(f));
  return out;
}

json summary_vector_json(const std::map<FeatureId, FeatureSummary>& features) {
  json arr = json::array();
  for (const auto& [id, s] : features) {
    arr.push_back({{"feature_id", std::string(feature_name(id))}, {"vector", s.vector}});
  }
  return arr;
}

void dump_features(const std::filesystem::path& dir, std::string_view side,
                   const std::string& stem, const std::map<FeatureId, FeatureSummary>& features) {
  const auto sub = dir / side;
  std::filesystem::create_directories(sub);
  std::ofstream out(sub / (stem + ".json"), std::ios::binary);
  out << summary_vector_json(features).dump() << '\n';
  if (!out) throw IoError("cannot write feature dump for " + stem);
}

SideAnalysis analyse(const std::filesystem::path& path, const std::string& stem,
                     Backend* backend, const EvalConfig& config) {
  const AudioBuffer audio = load_canonical(path);
  SideAnalysis side;
  side.features = extract_features(audio, config.features, config.frame);
  if (backend) side.embedding = backend->embed(audio, stem).vector;
  return side;
}

PairRecord evaluate_pair(const PairPaths& pair, const EvalConfig& config) {
  PairRecord rec;
  try {
    const SideAnalysis ref = analyse(pair.reference, pair.stem, config.reference_backend.get(), config);
    const SideAnalysis gen = analyse(pair.generated, pair.stem, config.generated_backend.get(), config);
    if (config.feature_dump_dir) {
      dump_features(*config.feature_dump_dir, "reference", pair.stem, ref.features);
      dump_features(*config.feature_dump_dir, "generated", pair.stem, gen.features);
    }
    rec = score_pair(ref, gen);
    for (auto& [metric, v] : rec.scores) v = quantize_score(v);
  } catch (const std::exception& e) {
    rec = PairRecord{};
    rec.error = e.what();
  }
  rec.pair_id = pair.stem;
  rec.reference_file = pair.reference.filename().string();
  rec.generated_file = pair.generated.filename().string();
  rec.emotion = std::string(emotion_name(
      config.parse_emotions ? parse_emotion(pair.stem, config.aliases) : Emotion::kUnknown));
  return rec;
}

}  // namespace

std::string_view emotion_name(Emotion e) {
  for (const auto& [emotion, name] : kEmotionNames) {
    if (emotion == e) return name;
  }
  return "unknown";
}

std::optional<Emotion> parse_emotion_name(std::string_view name) {
  for (const auto& [emotion, canonical] : kEmotionNames) {
    if (canonical == name) return emotion;
  }
  return std::nullopt;
}

AliasTable::AliasTable(std::map<std::string, Emotion> aliases) {
  for (auto& [token, e] : aliases) aliases_.emplace(lower(token), e);
}

AliasTable AliasTable::defaults() {
  return AliasTable({
      {"anger", Emotion::kAnger},         {"angry", Emotion::kAnger},
      {"ang", Emotion::kAnger},           {"disgust", Emotion::kDisgust},
      {"disgusted", Emotion::kDisgust},   {"dis", Emotion::kDisgust},
      {"fear", Emotion::kFear},           {"fearful", Emotion::kFear},
      {"fea", Emotion::kFear},            {"happiness", Emotion::kHappiness},
      {"happy", Emotion::kHappiness},     {"hap", Emotion::kHappiness},
      {"neutral", Emotion::kNeutral},     {"neu", Emotion::kNeutral},
      {"sadness", Emotion::kSadness},     {"sad", Emotion::kSadness},
  });
}

AliasTable AliasTable::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("alias table: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("alias table must be a JSON object");
  std::map<std::string, Emotion> aliases;
  for (const auto& [token, label] : doc.items()) {
    if (!label.is_string()) throw ParseError("alias '" + token + "' must map to a string");
    const auto e = parse_emotion_name(label.get<std::string>());
    if (!e) throw ParseError("alias '" + token + "' maps to unknown label '" + label.get<std::string>() + "'");
    aliases.emplace(token, *e);
  }
  return AliasTable(std::move(aliases));
}

AliasTable AliasTable::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open alias table " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::optional<Emotion> AliasTable::lookup(std::string_view token) const {
  const auto it = aliases_.find(lower(token));
  if (it == aliases_.end()) return std::nullopt;
  return it->second;
}

Emotion parse_emotion(std::string_view stem, const AliasTable& table) {
  std::size_t start = 0;
  while (start <= stem.size()) {
    const std::size_t end = stem.find_first_of("_-.", start);
    const std::string_view token =
        stem.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    if (!token.empty()) {
      if (const auto e = table.lookup(token)) return *e;
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return Emotion::kUnknown;
}

Discovery discover_pairs(const std::filesystem::path& reference_dir,
                         const std::filesystem::path& generated_dir) {
  const auto refs = list_wavs(reference_dir);
  const auto gens = list_wavs(generated_dir);
  Discovery d;
  for (const auto& [stem, path] : refs) {
    const auto it = gens.find(stem);
    if (it == gens.end()) {
      d.unmatched_reference.push_back(path.filename().string());
    } else {
      d.pairs.push_back({stem, path, it->second});
    }
  }
  for (const auto& [stem, path] : gens) {
    if (!refs.contains(stem)) d.unmatched_generated.push_back(path.filename().string());
  }
  if (d.pairs.empty()) {
    throw NoPairs("no file stems shared by " + reference_dir.string() + " and " +
                  generated_dir.string());
  }
  return d;
}

std::vector<std::string> EvalConfig::metric_names() const {
  std::vector<std::string> out;
  if (embeddings_enabled()) out.emplace_back(kEmbeddingMetric);
  for (FeatureId id : kAllFeatures) {
    if (std::find(features.begin(), features.end(), id) != features.end()) {
      out.emplace_back(feature_name(id));
    }
  }
  return out;
}

double quantize_score(double v) {
  const double q = std::round(v * 1e6) / 1e6;
  return q == 0.0 ? 0.0 : q;  // no "-0.000000"
}

std::vector<PairRecord> evaluate_corpus(const std::vector<PairPaths>& pairs,
                                        const EvalConfig& config) {
  if (config.reference_backend == nullptr && config.generated_backend != nullptr) {
    throw Error("generated-side embedding backend without a reference-side backend");
  }
  if (config.reference_backend != nullptr && config.generated_backend == nullptr) {
    throw Error("reference-side embedding backend without a generated-side backend");
  }
  config.frame.validate();

  std::vector<PairRecord> records(pairs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < pairs.size(); i = next++) {
      records[i] = evaluate_pair(pairs[i], config);
      const std::size_t n = ++done;
      if (config.progress) config.progress(n, pairs.size());
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(config.workers, 1, std::max<std::size_t>(pairs.size(), 1));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  std::sort(records.begin(), records.end(),
            [](const PairRecord& a, const PairRecord& b) { return a.pair_id < b.pair_id; });
  if (!records.empty() &&
      std::none_of(records.begin(), records.end(), [](const PairRecord& r) { return r.ok(); })) {
    throw Error("every pair failed; first error: " + *records.front().error);
  }
  return records;
}

}  // namespace vceval
