#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "test_support.hpp"
#include "vceval/errors.hpp"
#include "vceval/pipeline.hpp"

using namespace vceval;
using namespace vceval::testing;

namespace {

void touch_wav(const std::filesystem::path& p, double hz = 440.0) { write_wav(p, tone(hz, 0.3, 16000, 0.4)); }

PairRecord record(std::string id, std::string emotion, std::map<std::string, double> scores) {
  PairRecord r;
  r.pair_id = id;
  r.reference_file = r.generated_file = id + ".wav";
  r.emotion = std::move(emotion);
  r.scores = std::move(scores);
  return r;
}

struct Corpus {
  TempDir dir;
  std::filesystem::path ref = dir / "ref";
  std::filesystem::path gen = dir / "gen";
  Corpus() {
    std::filesystem::create_directories(ref);
    std::filesystem::create_directories(gen);
  }
};

}  // namespace

TEST_CASE("emotion parsing") {
  const auto t = AliasTable::defaults();
  CHECK(parse_emotion("1001_DFA_ANG_XX", t) == Emotion::kAnger);
  CHECK(parse_emotion("speaker3_happy_12", t) == Emotion::kHappiness);
  CHECK(parse_emotion("utt0042", t) == Emotion::kUnknown);
  CHECK(parse_emotion("a-sad.take2", t) == Emotion::kSadness);
  CHECK(parse_emotion("NEU_then_ANG", t) == Emotion::kNeutral);  // leftmost token wins
  CHECK(parse_emotion("fearful", t) == Emotion::kFear);
  CHECK(parse_emotion("x_DIS", t) == Emotion::kDisgust);
  CHECK(parse_emotion("sadness", t) == Emotion::kSadness);
  CHECK(parse_emotion("", t) == Emotion::kUnknown);
  CHECK(parse_emotion("__", t) == Emotion::kUnknown);
  CHECK(parse_emotion("unhappy_1", t) == Emotion::kUnknown);  // whole tokens only
  CHECK(parse_emotion("angry", AliasTable{}) == Emotion::kUnknown);
  for (auto e : {Emotion::kAnger, Emotion::kDisgust, Emotion::kFear, Emotion::kHappiness,
                 Emotion::kNeutral, Emotion::kSadness, Emotion::kUnknown}) {
    CHECK(parse_emotion_name(emotion_name(e)) == e);
  }
}

TEST_CASE("alias table from JSON") {
  const auto t = AliasTable::from_json(R"({"W": "anger", "furious": "anger", "calm": "neutral"})");
  CHECK(t.size() == 3);
  CHECK(parse_emotion("03a01Wa", t) == Emotion::kUnknown);
  CHECK(parse_emotion("spk_w_01", t) == Emotion::kAnger);
  CHECK(parse_emotion("spk_calm", t) == Emotion::kNeutral);
  CHECK(parse_emotion("spk_angry", t) == Emotion::kUnknown);  // replaces the defaults
  CHECK_THROWS_AS(AliasTable::from_json("[]"), ParseError);
  CHECK_THROWS_AS(AliasTable::from_json("{"), ParseError);
  CHECK_THROWS_AS(AliasTable::from_json(R"({"x": "rage"})"), ParseError);
  CHECK_THROWS_AS(AliasTable::from_json(R"({"x": 1})"), ParseError);
  CHECK_THROWS_AS(AliasTable::from_file("/nonexistent/aliases.json"), ParseError);
}

TEST_CASE("pair discovery") {
  Corpus c;
  SUBCASE("matching by stem, unmatched reported") {
    touch_wav(c.ref / "a.wav");
    touch_wav(c.ref / "b.wav");
    touch_wav(c.gen / "b.wav");
    touch_wav(c.gen / "a.wav");
    touch_wav(c.gen / "c.wav");
    spit(c.gen / "notes.txt", "x");
    const auto d = discover_pairs(c.ref, c.gen);
    REQUIRE(d.pairs.size() == 2);
    CHECK(d.pairs[0].stem == "a");
    CHECK(d.pairs[1].stem == "b");
    CHECK(d.pairs[1].generated == c.gen / "b.wav");
    CHECK(d.unmatched_generated == std::vector<std::string>{"c.wav"});
    CHECK(d.unmatched_reference.empty());
  }
  SUBCASE("case-sensitive") {
    touch_wav(c.ref / "a.wav");
    touch_wav(c.gen / "A.wav");
    CHECK_THROWS_AS(discover_pairs(c.ref, c.gen), NoPairs);
  }
  SUBCASE("non-recursive") {
    touch_wav(c.ref / "x.wav");
    touch_wav(c.gen / "x.wav");
    std::filesystem::create_directories(c.ref / "sub");
    std::filesystem::create_directories(c.gen / "sub");
    touch_wav(c.ref / "sub" / "y.wav");
    touch_wav(c.gen / "sub" / "y.wav");
    const auto d = discover_pairs(c.ref, c.gen);
    REQUIRE(d.pairs.size() == 1);
    CHECK(d.pairs[0].stem == "x");
  }
  SUBCASE("missing directory") {
    CHECK_THROWS_AS(discover_pairs(c.dir / "nope", c.gen), IoError);
  }
}

TEST_CASE("evaluate_corpus on identical directories") {
  Corpus c;
  touch_wav(c.ref / "s1_happy.wav", 220.0);
  touch_wav(c.ref / "s2_sad.wav", 330.0);
  write_wav(c.ref / "s3.wav", noise(0.3, 9));
  EvalConfig cfg;
  cfg.workers = 3;
  const auto recs = evaluate_corpus(discover_pairs(c.ref, c.ref).pairs, cfg);
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].emotion == "happiness");
  CHECK(recs[1].emotion == "sadness");
  CHECK(recs[2].emotion == "unknown");
  for (const auto& r : recs) {
    REQUIRE(r.ok());
    CHECK(r.scores.size() == 10);
    for (const auto& [m, v] : r.scores) CHECK(std::abs(v - 1.0) <= 1e-6);
  }
}

TEST_CASE("evaluate_corpus isolates failures") {
  Corpus c;
  for (const char* s : {"a", "b", "c"}) {
    touch_wav(c.ref / (std::string(s) + ".wav"));
    touch_wav(c.gen / (std::string(s) + ".wav"), 500.0);
  }
  spit(c.gen / "b.wav", "RIFF garbage");
  EvalConfig cfg;
  cfg.features = {FeatureId::kRms, FeatureId::kMelSpectrogram};
  const auto recs = evaluate_corpus(discover_pairs(c.ref, c.gen).pairs, cfg);
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].ok());
  CHECK_FALSE(recs[1].ok());
  CHECK(recs[2].ok());
  CHECK(recs[1].scores.empty());
  const auto s = aggregate(recs);
  CHECK(s.pair_count == 2);
  REQUIRE(s.failures.size() == 1);
  CHECK(s.failures[0].pair_id == "b");
  CHECK(details_to_csv(recs, {"mel_spectrogram", "rms"}).find("\nb,") == std::string::npos);

  spit(c.gen / "a.wav", "junk");
  spit(c.gen / "c.wav", "junk");
  CHECK_THROWS_AS(evaluate_corpus(discover_pairs(c.ref, c.gen).pairs, cfg), Error);
}

TEST_CASE("evaluate_corpus options") {
  Corpus c;
  for (int i = 0; i < 6; ++i) {
    const std::string stem = "spk_angry_" + std::to_string(i);
    touch_wav(c.ref / (stem + ".wav"), 200.0 + 40 * i);
    touch_wav(c.gen / (stem + ".wav"), 210.0 + 40 * i);
  }
  const auto pairs = discover_pairs(c.ref, c.gen).pairs;

  SUBCASE("emotions off") {
    EvalConfig cfg;
    cfg.features = {FeatureId::kRms};
    cfg.parse_emotions = false;
    for (const auto& r : evaluate_corpus(pairs, cfg)) CHECK(r.emotion == "unknown");
  }
  SUBCASE("worker count does not change the output") {
    EvalConfig one;
    one.features = {FeatureId::kPitch, FeatureId::kChromagram};
    EvalConfig many = one;
    many.workers = 8;
    const auto a = evaluate_corpus(pairs, one);
    const auto b = evaluate_corpus(pairs, many);
    CHECK(details_to_csv(a, one.metric_names()) == details_to_csv(b, many.metric_names()));
  }
  SUBCASE("progress reaches the total") {
    EvalConfig cfg;
    cfg.features = {FeatureId::kRms};
    cfg.workers = 4;
    std::atomic<std::size_t> calls{0};
    std::atomic<std::size_t> last{0};
    cfg.progress = [&](std::size_t done, std::size_t total) {
      ++calls;
      CHECK(total == 6);
      if (done == total) last = done;
    };
    evaluate_corpus(pairs, cfg);
    CHECK(calls == 6);
    CHECK(last == 6);
  }
  SUBCASE("feature dump") {
    EvalConfig cfg;
    cfg.features = {FeatureId::kRms, FeatureId::kChromaCqt};
    cfg.feature_dump_dir = c.dir / "dump";
    evaluate_corpus(pairs, cfg);
    const auto doc = nlohmann::json::parse(slurp(c.dir / "dump" / "generated" / "spk_angry_3.json"));
    REQUIRE(doc.size() == 2);
    CHECK(doc[0]["feature_id"] == "rms");
    CHECK(doc[0]["vector"].size() == 256);
    CHECK(doc[1]["feature_id"] == "chroma_cqt");
    CHECK(std::filesystem::exists(c.dir / "dump" / "reference" / "spk_angry_0.json"));
  }
  SUBCASE("half-configured embeddings are rejected") {
    spit(c.dir / "e.json", R"({"x": [1.0]})");
    EvalConfig cfg;
    cfg.reference_backend = load_backend(BackendSpec::precomputed(c.dir / "e.json"));
    CHECK_THROWS_AS(evaluate_corpus(pairs, cfg), Error);
  }
  SUBCASE("missing precomputed embedding fails only that pair") {
    spit(c.dir / "e.json", R"({"spk_angry_0": [1.0, 0.0], "spk_angry_1": [0.6, 0.8]})");
    EvalConfig cfg;
    cfg.features = {};
    cfg.reference_backend = load_backend(BackendSpec::precomputed(c.dir / "e.json"));
    cfg.generated_backend = cfg.reference_backend;
    const auto recs = evaluate_corpus(pairs, cfg);
    CHECK(recs[0].ok());
    CHECK(recs[0].scores.at("embedding") == 1.0);
    CHECK(recs[1].ok());
    for (std::size_t i = 2; i < recs.size(); ++i) CHECK_FALSE(recs[i].ok());
    CHECK(cfg.metric_names() == std::vector<std::string>{"embedding"});
  }
}

TEST_CASE("quantize_score") {
  CHECK(quantize_score(0.1234565) == doctest::Approx(0.123457).epsilon(1e-15));
  CHECK(quantize_score(1.0) == 1.0);
  CHECK(std::signbit(quantize_score(-1e-9)) == false);
  CHECK(quantize_score(-0.5) == -0.5);
}

TEST_CASE("aggregate") {
  SUBCASE("per-emotion means") {
    const auto s = aggregate({record("a1", "anger", {{"embedding", 0.8}}),
                              record("a2", "anger", {{"embedding", 0.6}})});
    CHECK(s.by_emotion.at("anger").at("embedding") == doctest::Approx(0.7).epsilon(1e-15));
  }
  SUBCASE("emotion average row and overall") {
    const auto s = aggregate({record("a", "anger", {{"embedding", 0.7}}),
                              record("n1", "neutral", {{"embedding", 0.9}}),
                              record("n2", "neutral", {{"embedding", 0.9}})});
    CHECK(s.emotion_average.at("embedding") == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(s.overall.at("embedding") == doctest::Approx(2.5 / 3.0).epsilon(1e-15));
    CHECK(s.counts.at("neutral") == 2);
  }
  SUBCASE("all unknown") {
    const auto s = aggregate({record("x", "unknown", {{"rms", 0.5}}), record("y", "unknown", {{"rms", 0.7}})});
    CHECK(s.by_emotion.size() == 1);
    CHECK(s.by_emotion.count("unknown") == 1);
    CHECK(s.emotion_average.empty());
  }
  SUBCASE("unknown is excluded from the average row only") {
    const auto s = aggregate({record("x", "unknown", {{"rms", 0.1}}), record("y", "sadness", {{"rms", 0.5}})});
    CHECK(s.emotion_average.at("rms") == 0.5);
    CHECK(s.overall.at("rms") == doctest::Approx(0.3));
  }
  SUBCASE("empty input") {
    CHECK_THROWS_AS(aggregate({}), EmptyInput);
    PairRecord bad = record("z", "unknown", {});
    bad.error = "decode failed";
    CHECK_THROWS_AS(aggregate({bad}), EmptyInput);
  }
}

// Property: counts conserve the number of successful pairs and the overall
// mean equals the count-weighted mean of the per-emotion means.
TEST_CASE("aggregation invariants on random records") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const char* labels[] = {"anger", "disgust", "fear", "happiness", "neutral", "sadness", "unknown"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PairRecord> recs;
    const int n = 1 + static_cast<int>(u(rng) * 40);
    std::size_t ok = 0;
    for (int i = 0; i < n; ++i) {
      auto r = record("p" + std::to_string(i), labels[static_cast<int>(u(rng) * 7)], {{"embedding", u(rng)}, {"rms", u(rng)}});
      if (u(rng) < 0.1 && i > 0) {
        r.error = "x";
        r.scores.clear();
      } else {
        ++ok;
      }
      recs.push_back(r);
    }
    const auto s = aggregate(recs);
    std::size_t total = 0;
    double weighted = 0.0;
    for (const auto& [e, c] : s.counts) {
      total += c;
      weighted += c * s.by_emotion.at(e).at("embedding");
    }
    CHECK(total == ok);
    CHECK(s.pair_count == ok);
    CHECK(weighted / total == doctest::Approx(s.overall.at("embedding")).epsilon(1e-12));
  }
}

TEST_CASE("reports") {
  TempDir dir;
  std::vector<PairRecord> recs = {record("b_sad", "sadness", {{"embedding", 0.5}, {"rms", 0.25}}),
                                  record("a,comma", "anger", {{"embedding", 0.75}, {"rms", 0.0}})};
  recs[1].flags["rms"] = "zero_norm_one";
  auto s = aggregate(recs);
  s.config.metrics = {"embedding", "rms"};
  s.config.backend = "precomputed:e.json";
  s.config.embedding_dim = 4;
  s.unmatched_generated = {"extra.wav"};
  write_reports(recs, s, dir / "out");

  const auto csv = slurp(dir / "out" / "details.csv");
  CHECK(csv ==
        "pair_id,reference_file,generated_file,emotion,embedding,rms,flags\n"
        "\"a,comma\",\"a,comma.wav\",\"a,comma.wav\",anger,0.750000,0.000000,rms:zero_norm_one\n"
        "b_sad,b_sad.wav,b_sad.wav,sadness,0.500000,0.250000,\n");
  CHECK(csv.find('\r') == std::string::npos);

  const auto json_text = slurp(dir / "out" / "summary.json");
  CHECK(summary_from_json(json_text) == s);
  CHECK(summary_to_json(summary_from_json(json_text)) == json_text);
  CHECK_THROWS_AS(summary_from_json("{}"), ParseError);
  CHECK_THROWS_AS(summary_from_json("not json"), ParseError);

  write_reports(recs, s, dir / "again");
  CHECK(slurp(dir / "again" / "details.csv") == csv);
  CHECK(slurp(dir / "again" / "summary.json") == json_text);

  spit(dir / "file", "x");
  CHECK_THROWS_AS(write_reports(recs, s, dir / "file" / "sub"), IoError);
}

TEST_CASE("fingerprint and column order") {
  EvalConfig cfg;
  CHECK(cfg.metric_names() == std::vector<std::string>{"pitch", "mel_spectrogram", "rms", "spectral_centroid",
                                                        "spectral_flatness", "spectral_rolloff", "tempogram",
                                                        "chromagram", "pseudo_cqt", "chroma_cqt"});
  cfg.features = {FeatureId::kRms, FeatureId::kMelSpectrogram};
  CHECK(cfg.metric_names() == std::vector<std::string>{"mel_spectrogram", "rms"});
  cfg.parse_emotions = false;
  const auto fp = make_fingerprint(cfg);
  CHECK(fp.backend == "none");
  CHECK(fp.emotions == "off");
  CHECK(fp.n_fft == 1024);
  CHECK(fp.hop == 256);
  CHECK(fp.sample_rate == 16000);
  CHECK_FALSE(fp.embedding_dim.has_value());
}
