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

#include "vceval/embedding.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "onnx_backend.hpp"
#include "vceval/errors.hpp"

namespace vceval {

namespace {

using json = nlohmann::json;

class PrecomputedBackend final : public Backend {
 public:
  PrecomputedBackend(EmbeddingStore store, std::string source)
      : store_(std::move(store)), source_(std::move(source)) {}

  std::optional<std::size_t> dim() const override { return store_.dim(); }
  std::string id() const override { return "precomputed:" + source_; }

  SpeakerEmbedding embed(const AudioBuffer& buf, std::string_view key) override {
    if (buf.sample_rate != kCanonicalRate) {
      throw RateError("embedding input must be 16000 Hz, got " + std::to_string(buf.sample_rate));
    }
    return {store_.at(key)};
  }

 private:
  EmbeddingStore store_;
  std::string source_;
};

}  // namespace

EmbeddingStore::EmbeddingStore(std::map<std::string, std::vector<double>> entries) {
  for (auto& [stem, vec] : entries) {
    if (dim_ && *dim_ != vec.size()) {
      throw DimensionMismatch("embedding for '" + stem + "' has length " +
                              std::to_string(vec.size()) + ", expected " + std::to_string(*dim_));
    }
    dim_ = vec.size();
    entries_.emplace(stem, std::move(vec));
  }
}

bool EmbeddingStore::contains(std::string_view stem) const {
  return entries_.find(stem) != entries_.end();
}

const std::vector<double>& EmbeddingStore::at(std::string_view stem) const {
  const auto it = entries_.find(stem);
  if (it == entries_.end()) {
    throw MissingEmbedding("no precomputed embedding for '" + std::string(stem) + "'");
  }
  return it->second;
}

EmbeddingStore parse_precomputed(std::string_view json_text) {
  std::set<std::string> seen;
  std::string duplicate;
  const json::parser_callback_t track_keys = [&](int depth, json::parse_event_t event,
                                                 json& parsed) {
    if (event == json::parse_event_t::key && depth == 1) {
      auto key = parsed.get<std::string>();
      if (!seen.insert(key).second && duplicate.empty()) duplicate = std::move(key);
    }
    return true;
  };

  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end(), track_keys);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("embedding manifest: ") + e.what());
  }
  if (!duplicate.empty()) throw ParseError("embedding manifest: duplicate stem '" + duplicate + "'");
  if (!doc.is_object()) throw ParseError("embedding manifest must be a JSON object");

  std::map<std::string, std::vector<double>> entries;
  for (const auto& [stem, value] : doc.items()) {
    if (!value.is_array()) throw ParseError("embedding for '" + stem + "' is not an array");
    std::vector<double> vec;
    vec.reserve(value.size());
    double norm = 0.0;
    for (const auto& x : value) {
      if (!x.is_number()) throw ParseError("embedding for '" + stem + "' has a non-numeric entry");
      vec.push_back(x.get<double>());
      norm += vec.back() * vec.back();
    }
    if (vec.empty() || norm == 0.0) throw ParseError("embedding for '" + stem + "' has zero norm");
    entries.emplace(stem, std::move(vec));
  }
  return EmbeddingStore(std::move(entries));
}

EmbeddingStore read_precomputed(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open embedding manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_precomputed(ss.str());
}

std::string serialize_embeddings(const std::map<std::string, std::vector<double>>& entries) {
  std::string out = "{";
  bool first = true;
  for (const auto& [stem, vec] : entries) {
    out += first ? "\n  " : ",\n  ";
    first = false;
    out += json(stem).dump();
    out += ": [";
    for (std::size_t i = 0; i < vec.size(); ++i) {
      if (i) out += ", ";
      out += json(vec[i]).dump();
    }
    out += "]";
  }
  out += entries.empty() ? "}\n" : "\n}\n";
  return out;
}

std::unique_ptr<Backend> load_backend(const BackendSpec& spec) {
  if (spec.mode == BackendSpec::Mode::kModel) return make_onnx_backend(spec);

  EmbeddingStore store;
  try {
    store = read_precomputed(spec.path);
  } catch (const ParseError& e) {
    throw ModelLoadError(e.what());
  } catch (const DimensionMismatch& e) {
    throw ModelLoadError(e.what());
  }
  if (spec.expected_dim && store.dim() && *store.dim() != *spec.expected_dim) {
    throw ModelLoadError("embedding dimension " + std::to_string(*store.dim()) +
                         " does not match expected dimension " +
                         std::to_string(*spec.expected_dim));
  }
  return std::make_unique<PrecomputedBackend>(std::move(store), spec.path.filename().string());
}

}  // namespace vceval
