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

// vceval: voice-cloning evaluation from the command line.
//
//   vceval evaluate --reference-dir R --generated-dir G --output-dir O
//                   (--embedding-model M | --embeddings-ref A --embeddings-gen B
//                    | --no-embedding)
//   vceval prompts  --manifest M.tsv --seed N --out A.tsv
//   vceval embed    --input-dir D --model M.onnx --out E.json

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "vceval/audio_io.hpp"
#include "vceval/embedding.hpp"
#include "vceval/errors.hpp"
#include "vceval/pipeline.hpp"
#include "vceval/prompts.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitConfig = 2;

struct EvaluateArgs {
  std::string reference_dir;
  std::string generated_dir;
  std::string output_dir;
  std::string embedding_model;
  std::string embeddings_ref;
  std::string embeddings_gen;
  bool no_embedding = false;
  std::optional<std::size_t> embedding_dim;
  std::string onnxruntime;
  std::string features;
  std::string emotions = "auto";
  std::string alias_table;
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::string dump_features;
  bool quiet = false;
};

struct PromptsArgs {
  std::string manifest;
  std::uint64_t seed = 0;
  std::string out;
};

struct EmbedArgs {
  std::string input_dir;
  std::string model;
  std::string out;
  std::string onnxruntime;
  std::optional<std::size_t> embedding_dim;
};

// Thrown for flag combinations CLI11 cannot express; maps to exit 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<vceval::FeatureId> parse_feature_list(const std::string& list) {
  if (list.empty() || list == "all") return {vceval::kAllFeatures.begin(), vceval::kAllFeatures.end()};
  if (list == "none") return {};
  std::vector<vceval::FeatureId> ids;
  std::stringstream ss(list);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name.empty()) continue;
    const auto id = vceval::parse_feature_id(name);
    if (!id) throw ConfigError("unknown feature '" + name + "'");
    if (std::find(ids.begin(), ids.end(), *id) == ids.end()) ids.push_back(*id);
  }
  return ids;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw vceval::IoError("cannot write " + path);
}

vceval::BackendSpec model_spec(const std::string& model, const std::string& runtime,
                               std::optional<std::size_t> dim) {
  auto spec = vceval::BackendSpec::model(model);
  spec.expected_dim = dim;
  if (!runtime.empty()) spec.runtime_library = runtime;
  return spec;
}

int run_evaluate(const EvaluateArgs& a) {
  const int modes = (a.embedding_model.empty() ? 0 : 1) +
                    ((a.embeddings_ref.empty() && a.embeddings_gen.empty()) ? 0 : 1) +
                    (a.no_embedding ? 1 : 0);
  if (modes != 1) {
    throw ConfigError(
        "choose exactly one of --embedding-model, --embeddings-ref/--embeddings-gen, "
        "--no-embedding");
  }
  if (a.embeddings_ref.empty() != a.embeddings_gen.empty()) {
    throw ConfigError("--embeddings-ref and --embeddings-gen must be given together");
  }
  if (a.emotions != "auto" && a.emotions != "off") {
    throw ConfigError("--emotions must be 'auto' or 'off'");
  }
  if (a.workers == 0) throw ConfigError("--workers must be at least 1");

  vceval::EvalConfig config;
  config.features = parse_feature_list(a.features);
  config.parse_emotions = a.emotions == "auto";
  config.workers = a.workers;
  std::string alias_path = a.alias_table;
  if (alias_path.empty()) {
    if (const char* env = std::getenv("CLONEVAL_ALIAS_TABLE"); env && *env) alias_path = env;
  }
  if (!alias_path.empty()) {
    try {
      config.aliases = vceval::AliasTable::from_file(alias_path);
    } catch (const vceval::ParseError& e) {
      throw ConfigError(e.what());
    }
  }
  if (!a.dump_features.empty()) config.feature_dump_dir = a.dump_features;

  if (!a.embedding_model.empty()) {
    std::shared_ptr<vceval::Backend> backend =
        vceval::load_backend(model_spec(a.embedding_model, a.onnxruntime, a.embedding_dim));
    config.reference_backend = backend;
    config.generated_backend = backend;
  } else if (!a.embeddings_ref.empty()) {
    auto ref = vceval::BackendSpec::precomputed(a.embeddings_ref);
    auto gen = vceval::BackendSpec::precomputed(a.embeddings_gen);
    ref.expected_dim = gen.expected_dim = a.embedding_dim;
    config.reference_backend = vceval::load_backend(ref);
    config.generated_backend = vceval::load_backend(gen);
    if (config.reference_backend->dim() && config.generated_backend->dim() &&
        *config.reference_backend->dim() != *config.generated_backend->dim()) {
      throw vceval::DimensionMismatch("reference and generated embedding manifests differ in dimension");
    }
  }
  if (config.features.empty() && !config.embeddings_enabled()) {
    throw ConfigError("nothing to evaluate: no features and no embeddings");
  }

  const auto discovery = vceval::discover_pairs(a.reference_dir, a.generated_dir);
  for (const auto& f : discovery.unmatched_reference) {
    std::cerr << "warning: no generated file for reference " << f << "\n";
  }
  for (const auto& f : discovery.unmatched_generated) {
    std::cerr << "warning: no reference file for generated " << f << "\n";
  }

  if (!a.quiet) {
    config.progress = [](std::size_t done, std::size_t total) {
      if (done == total || done % 25 == 0) {
        std::fprintf(stderr, "\r%zu/%zu pairs", done, total);
        if (done == total) std::fputc('\n', stderr);
      }
    };
  }

  const auto records = vceval::evaluate_corpus(discovery.pairs, config);
  for (const auto& r : records) {
    if (!r.ok()) std::cerr << "error: " << r.pair_id << ": " << *r.error << "\n";
  }

  auto summary = vceval::aggregate(records);
  summary.config = vceval::make_fingerprint(config);
  summary.unmatched_reference = discovery.unmatched_reference;
  summary.unmatched_generated = discovery.unmatched_generated;
  vceval::write_reports(records, summary, a.output_dir);

  std::printf("pairs: %zu scored, %zu failed\n", summary.pair_count, summary.failures.size());
  for (const auto& metric : summary.config.metrics) {
    const auto it = summary.overall.find(metric);
    if (it != summary.overall.end()) std::printf("overall %s %.6f\n", metric.c_str(), it->second);
  }
  return kExitOk;
}

int run_prompts(const PromptsArgs& a) {
  const auto manifest = vceval::read_manifest_tsv(a.manifest);
  const auto assignments = vceval::make_prompt_assignments(manifest, a.seed);
  write_text(a.out, vceval::assignments_to_tsv(assignments));
  return kExitOk;
}

int run_embed(const EmbedArgs& a) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  if (!std::filesystem::is_directory(a.input_dir, ec)) {
    throw vceval::IoError("not a directory: " + a.input_dir);
  }
  for (const auto& entry : std::filesystem::directory_iterator(a.input_dir)) {
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (entry.is_regular_file() && ext == ".wav") files.push_back(entry.path());
  }
  if (files.empty()) {
    std::cerr << "error: no audio files in " << a.input_dir << "\n";
    return kExitRunFailure;
  }
  std::sort(files.begin(), files.end());

  auto backend = vceval::load_backend(model_spec(a.model, a.onnxruntime, a.embedding_dim));
  std::map<std::string, std::vector<double>> out;
  for (const auto& f : files) {
    const auto stem = f.stem().string();
    if (out.contains(stem)) {
      std::cerr << "warning: duplicate stem " << stem << ", keeping the first file\n";
      continue;
    }
    out.emplace(stem, backend->embed(vceval::load_canonical(f), stem).vector);
  }
  write_text(a.out, vceval::serialize_embeddings(out));
  std::printf("embedded %zu files (dim %zu)\n", out.size(), out.begin()->second.size());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Voice-cloning evaluation: speaker-embedding and acoustic-feature similarity"};
  app.require_subcommand(1);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score generated audio against references");
  evaluate->add_option("--reference-dir", ev.reference_dir, "Directory of reference WAVs")->required();
  evaluate->add_option("--generated-dir", ev.generated_dir, "Directory of generated WAVs")->required();
  evaluate->add_option("--output-dir", ev.output_dir, "Where details.csv and summary.json go")->required();
  evaluate->add_option("--embedding-model", ev.embedding_model, "ONNX speaker model");
  evaluate->add_option("--embeddings-ref", ev.embeddings_ref, "Precomputed reference embeddings (JSON)");
  evaluate->add_option("--embeddings-gen", ev.embeddings_gen, "Precomputed generated embeddings (JSON)");
  evaluate->add_flag("--no-embedding", ev.no_embedding, "Skip the speaker-embedding metric");
  evaluate->add_option("--embedding-dim", ev.embedding_dim, "Expected embedding dimension");
  evaluate->add_option("--onnxruntime", ev.onnxruntime, "Path to libonnxruntime.so");
  evaluate->add_option("--features", ev.features, "Comma-separated feature list, 'all' or 'none'");
  evaluate->add_option("--emotions", ev.emotions, "auto | off")->capture_default_str();
  evaluate->add_option("--alias-table", ev.alias_table,
                       "JSON token->emotion table (default: $CLONEVAL_ALIAS_TABLE or built-in)");
  evaluate->add_option("--workers", ev.workers, "Worker threads; results do not depend on it")
      ->capture_default_str();
  evaluate->add_option("--dump-features", ev.dump_features, "Write every feature summary as JSON here");
  evaluate->add_flag("--quiet", ev.quiet, "No progress counter");

  PromptsArgs pr;
  auto* prompts = app.add_subcommand("prompts", "Assign each sample a text prompt from another sample");
  prompts->add_option("--manifest", pr.manifest, "TSV: sample_id<TAB>text")->required();
  prompts->add_option("--seed", pr.seed, "Random seed")->required();
  prompts->add_option("--out", pr.out, "Output TSV: sample_id<TAB>source_sample_id<TAB>text")->required();

  EmbedArgs em;
  auto* embed = app.add_subcommand("embed", "Precompute speaker embeddings for a directory");
  embed->add_option("--input-dir", em.input_dir, "Directory of WAVs")->required();
  embed->add_option("--model", em.model, "ONNX speaker model")->required();
  embed->add_option("--out", em.out, "Output JSON manifest")->required();
  embed->add_option("--onnxruntime", em.onnxruntime, "Path to libonnxruntime.so");
  embed->add_option("--embedding-dim", em.embedding_dim, "Expected embedding dimension");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*evaluate) return run_evaluate(ev);
    if (*prompts) return run_prompts(pr);
    if (*embed) return run_embed(em);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRunFailure;
  }
  return kExitConfig;
}
