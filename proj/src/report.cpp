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

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "vceval/errors.hpp"
#include "vceval/pipeline.hpp"

namespace vceval {

namespace {

using json = nlohmann::json;

struct Accumulator {
  std::map<std::string, double> sums;
  std::map<std::string, std::size_t> counts;

  void add(const std::map<std::string, double>& scores) {
    for (const auto& [metric, v] : scores) {
      sums[metric] += v;
      ++counts[metric];
    }
  }

  std::map<std::string, double> means() const {
    std::map<std::string, double> out;
    for (const auto& [metric, sum] : sums) out[metric] = sum / static_cast<double>(counts.at(metric));
    return out;
  }
};

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("summary.json: missing key '") + key + "'");
  return j.at(key).get<T>();
}

}  // namespace

SummaryReport aggregate(const std::vector<PairRecord>& records) {
  SummaryReport out;
  Accumulator overall;
  std::map<std::string, Accumulator> by_emotion;
  for (const auto& r : records) {
    if (!r.ok()) {
      out.failures.push_back({r.pair_id, *r.error});
      continue;
    }
    overall.add(r.scores);
    by_emotion[r.emotion].add(r.scores);
    ++out.counts[r.emotion];
    ++out.pair_count;
  }
  if (out.pair_count == 0) throw EmptyInput("no successfully scored pairs to aggregate");

  out.overall = overall.means();
  Accumulator labelled;
  for (const auto& [emotion, acc] : by_emotion) {
    out.by_emotion[emotion] = acc.means();
    if (emotion != emotion_name(Emotion::kUnknown)) labelled.add(out.by_emotion[emotion]);
  }
  out.emotion_average = labelled.means();
  return out;
}

RunFingerprint make_fingerprint(const EvalConfig& config) {
  RunFingerprint fp;
  fp.n_fft = config.frame.n_fft;
  fp.hop = config.frame.hop;
  if (config.reference_backend) {
    fp.backend = config.reference_backend->id();
    if (config.generated_backend && config.generated_backend != config.reference_backend) {
      fp.backend += "|" + config.generated_backend->id();
    }
    fp.embedding_dim = config.reference_backend->dim();
  }
  fp.metrics = config.metric_names();
  fp.emotions = config.parse_emotions ? "auto" : "off";
  return fp;
}

std::string summary_to_json(const SummaryReport& s) {
  json config = {
      {"sample_rate", s.config.sample_rate},
      {"n_fft", s.config.n_fft},
      {"hop", s.config.hop},
      {"window", s.config.window},
      {"padding", s.config.padding},
      {"backend", s.config.backend},
      {"embedding_dim", s.config.embedding_dim ? json(*s.config.embedding_dim) : json(nullptr)},
      {"metrics", s.config.metrics},
      {"emotions", s.config.emotions},
  };
  json failures = json::array();
  for (const auto& f : s.failures) failures.push_back({{"pair_id", f.pair_id}, {"message", f.message}});

  json doc = {
      {"config", config},
      {"overall", s.overall},
      {"by_emotion", s.by_emotion},
      {"emotion_average", s.emotion_average},
      {"counts", s.counts},
      {"pair_count", s.pair_count},
      {"failures", failures},
      {"unmatched", {{"reference", s.unmatched_reference}, {"generated", s.unmatched_generated}}},
  };
  return doc.dump(2) + "\n";
}

SummaryReport summary_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("summary.json: ") + e.what());
  }
  SummaryReport s;
  try {
    const json& c = doc.at("config");
    s.config.sample_rate = field<int>(c, "sample_rate");
    s.config.n_fft = field<std::size_t>(c, "n_fft");
    s.config.hop = field<std::size_t>(c, "hop");
    s.config.window = field<std::string>(c, "window");
    s.config.padding = field<std::string>(c, "padding");
    s.config.backend = field<std::string>(c, "backend");
    if (!c.at("embedding_dim").is_null()) s.config.embedding_dim = c.at("embedding_dim").get<std::size_t>();
    s.config.metrics = field<std::vector<std::string>>(c, "metrics");
    s.config.emotions = field<std::string>(c, "emotions");

    s.overall = field<std::map<std::string, double>>(doc, "overall");
    s.by_emotion = field<std::map<std::string, std::map<std::string, double>>>(doc, "by_emotion");
    s.emotion_average = field<std::map<std::string, double>>(doc, "emotion_average");
    s.counts = field<std::map<std::string, std::size_t>>(doc, "counts");
    s.pair_count = field<std::size_t>(doc, "pair_count");
    for (const auto& f : doc.at("failures")) {
      s.failures.push_back({field<std::string>(f, "pair_id"), field<std::string>(f, "message")});
    }
    s.unmatched_reference = field<std::vector<std::string>>(doc.at("unmatched"), "reference");
    s.unmatched_generated = field<std::vector<std::string>>(doc.at("unmatched"), "generated");
  } catch (const json::exception& e) {
    throw ParseError(std::string("summary.json: ") + e.what());
  }
  return s;
}

std::string details_to_csv(const std::vector<PairRecord>& records,
                           const std::vector<std::string>& metrics) {
  std::string out = "pair_id,reference_file,generated_file,emotion";
  for (const auto& m : metrics) out += "," + m;
  out += ",flags\n";
  for (const auto& r : records) {
    if (!r.ok()) continue;
    out += csv_field(r.pair_id) + "," + csv_field(r.reference_file) + "," +
           csv_field(r.generated_file) + "," + csv_field(r.emotion);
    std::string flags;
    for (const auto& m : metrics) {
      const auto it = r.scores.find(m);
      out += ",";
      if (it != r.scores.end()) out += fixed6(it->second);
      if (const auto f = r.flags.find(m); f != r.flags.end()) {
        if (!flags.empty()) flags += ';';
        flags += m + ":" + f->second;
      }
    }
    out += "," + csv_field(flags) + "\n";
  }
  return out;
}

void write_reports(const std::vector<PairRecord>& records, const SummaryReport& summary,
                   const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<PairRecord> ordered = records;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const PairRecord& a, const PairRecord& b) { return a.pair_id < b.pair_id; });
  write_file(out_dir / "details.csv", details_to_csv(ordered, summary.config.metrics));
  write_file(out_dir / "summary.json", summary_to_json(summary));
}

}  // namespace vceval
