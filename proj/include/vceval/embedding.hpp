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

#ifndef VCEVAL_EMBEDDING_HPP_
#define VCEVAL_EMBEDDING_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vceval/audio_io.hpp"

namespace vceval {

struct SpeakerEmbedding {
  std::vector<double> vector;
};

struct BackendSpec {
  enum class Mode { kModel, kPrecomputed };

  Mode mode = Mode::kPrecomputed;
  std::filesystem::path path;
  std::optional<std::size_t> expected_dim;
  // Model mode only: explicit ONNX Runtime shared library. Falls back to
  // $VCEVAL_ONNXRUNTIME, then the loader's default search path.
  std::optional<std::filesystem::path> runtime_library;

  static BackendSpec model(std::filesystem::path p) { return {Mode::kModel, std::move(p), {}, {}}; }
  static BackendSpec precomputed(std::filesystem::path p) {
    return {Mode::kPrecomputed, std::move(p), {}, {}};
  }
};

// Produces speaker embeddings for 16 kHz mono audio.
class Backend {
 public:
  virtual ~Backend() = default;

  // Embedding width; unknown until the first call for models with a dynamic
  // output shape, and for empty precomputed stores.
  virtual std::optional<std::size_t> dim() const = 0;
  virtual std::string id() const = 0;

  // `key` is the file stem, used by lookup-based backends. Throws RateError
  // unless buf is mono at exactly 16 kHz.
  virtual SpeakerEmbedding embed(const AudioBuffer& buf, std::string_view key) = 0;
};

// Stem -> vector store read from a JSON object. Read-only after load.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::map<std::string, std::vector<double>> entries);

  std::optional<std::size_t> dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(std::string_view stem) const;
  // Throws MissingEmbedding.
  const std::vector<double>& at(std::string_view stem) const;
  const std::map<std::string, std::vector<double>, std::less<>>& entries() const { return entries_; }

 private:
  std::map<std::string, std::vector<double>, std::less<>> entries_;
  std::optional<std::size_t> dim_;
};

// Throws ParseError (bad JSON, duplicate stem, non-numeric entry, zero-norm
// vector) or DimensionMismatch.
EmbeddingStore parse_precomputed(std::string_view json_text);
EmbeddingStore read_precomputed(const std::filesystem::path& path);

// Canonical JSON for a store: keys sorted, one entry per line.
std::string serialize_embeddings(const std::map<std::string, std::vector<double>>& entries);

// Throws ModelLoadError or SchemaError.
std::unique_ptr<Backend> load_backend(const BackendSpec& spec);

}  // namespace vceval

#endif  // VCEVAL_EMBEDDING_HPP_
