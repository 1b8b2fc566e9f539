#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_support.hpp"
#include "vceval/errors.hpp"
#include "vceval/prompts.hpp"

using namespace vceval;
using namespace vceval::testing;

namespace {

std::vector<ManifestEntry> manifest(std::size_t n) {
  std::vector<ManifestEntry> m;
  for (std::size_t i = 0; i < n; ++i) m.push_back({"s" + std::to_string(i), "sentence " + std::to_string(i)});
  return m;
}

}  // namespace

TEST_CASE("two samples must swap") {
  const std::vector<ManifestEntry> m = {{"A", "first"}, {"B", "second"}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = make_prompt_assignments(m, seed);
    REQUIRE(a.size() == 2);
    CHECK(a[0] == PromptAssignment{"A", "second", "B"});
    CHECK(a[1] == PromptAssignment{"B", "first", "A"});
  }
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(make_prompt_assignments(manifest(1), 0), TooFewSamples);
  CHECK_THROWS_AS(make_prompt_assignments(manifest(0), 0), TooFewSamples);
  CHECK_THROWS_AS(make_prompt_assignments(std::vector<ManifestEntry>{{"a", "x"}, {"a", "y"}}, 0), ParseError);
  CHECK_THROWS_AS(make_prompt_assignments(std::vector<ManifestEntry>{{"a", "x"}, {"b", ""}}, 0), ParseError);
}

TEST_CASE("no self-assignment and seed stability") {
  const auto m = manifest(1000);
  for (std::uint64_t seed : {17ull, 0ull, 0xFFFFFFFFFFFFFFFFull}) {
    const auto a = make_prompt_assignments(m, seed);
    CHECK(a == make_prompt_assignments(m, seed));
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].sample_id == m[i].sample_id);
      CHECK(a[i].source_sample_id != a[i].sample_id);
      CHECK(a[i].assigned_text != m[i].text);
    }
  }
  CHECK(make_prompt_assignments(m, 1) != make_prompt_assignments(m, 2));
}

// Each other sample should be drawn about equally often.
TEST_CASE("draws are uniform over the other samples") {
  const auto m = manifest(5);
  std::map<std::string, int> counts;
  constexpr int kSeeds = 20000;
  for (int seed = 0; seed < kSeeds; ++seed) counts[make_prompt_assignments(m, seed)[2].source_sample_id]++;
  CHECK(counts.count("s2") == 0);
  REQUIRE(counts.size() == 4);
  double chi2 = 0.0;
  for (const auto& [id, c] : counts) {
    const double e = kSeeds / 4.0;
    chi2 += (c - e) * (c - e) / e;
  }
  CHECK(chi2 < 16.27);  // 3 dof, p = 0.001
}

TEST_CASE("manifest TSV parsing") {
  const auto m = parse_manifest_tsv("a\tHello there\r\n\nb\tSecond\twith tab\nc\tlast");
  REQUIRE(m.size() == 3);
  CHECK(m[0].sample_id == "a");
  CHECK(m[0].text == "Hello there");
  CHECK(m[1].text == "Second\twith tab");
  CHECK(m[2].text == "last");
  CHECK_THROWS_AS(parse_manifest_tsv("no tab here\n"), ParseError);
  CHECK_THROWS_AS(parse_manifest_tsv("\ttext\n"), ParseError);
  CHECK(parse_manifest_tsv("").empty());
  CHECK_THROWS_AS(read_manifest_tsv("/nonexistent/manifest.tsv"), IoError);
}

TEST_CASE("assignments TSV") {
  const std::vector<PromptAssignment> a = {{"x", "text one", "y"}, {"y", "text two", "x"}};
  CHECK(assignments_to_tsv(a) == "x\ty\ttext one\ny\tx\ttext two\n");
}
