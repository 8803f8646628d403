#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <functional>
#include <limits>

#include "designpipe/error.hpp"
#include "designpipe/image_gen.hpp"
#include "designpipe/random.hpp"
#include "designpipe/text_util.hpp"
#include "helpers.hpp"

using namespace designpipe;
using testing::fixture;

namespace {

// One token per whitespace word: additive, so chunk costs are easy to reason about.
struct WordCounter final : TokenCounter {
  size_t count(std::string_view text) const override { return split_whitespace(text).size(); }
};

std::string sentence_of(size_t words, const std::string& tag) {
  std::string s;
  for (size_t i = 0; i < words; ++i) s += (i ? " " : "") + tag + std::to_string(i);
  return s + ".";
}

// Exhaustive oracle: fewest contiguous chunks with every chunk within budget.
size_t min_chunks_brute_force(const std::vector<size_t>& costs, size_t budget) {
  const size_t n = costs.size();
  size_t best = std::numeric_limits<size_t>::max();
  // Each of the n-1 gaps is either a cut or not.
  for (uint32_t mask = 0; mask < (1u << (n - 1)); ++mask) {
    size_t chunks = 1, sum = 0;
    bool ok = true;
    for (size_t i = 0; i < n && ok; ++i) {
      sum += costs[i];
      if (sum > budget) ok = false;
      if (i + 1 < n && (mask >> i) & 1u) {
        ++chunks;
        sum = 0;
      }
    }
    if (ok) best = std::min(best, chunks);
  }
  return best;
}

bool is_subsequence(const std::vector<std::string>& sub, const std::vector<std::string>& full) {
  size_t j = 0;
  for (const auto& s : full) {
    if (j < sub.size() && sub[j] == s) ++j;
  }
  return j == sub.size();
}

DesignPlan plan_with(std::string bg, std::string obj) {
  DesignPlan p;
  p.description = "d";
  p.keywords = {"k"};
  p.captions = {std::move(bg), std::move(obj)};
  p.headings.heading = {"h"};
  return p;
}

}  // namespace

TEST_CASE("assemble_image_prompt joins the captions") {
  CHECK(assemble_image_prompt(plan_with("A warm beige backdrop.", "A coffee cup at lower left.")) ==
        "A warm beige backdrop. A coffee cup at lower left.");
  CHECK(assemble_image_prompt(plan_with("Beige   backdrop.  ", "  Cup. ")) == "Beige backdrop. Cup.");
  for (const auto& line : testing::read_lines(fixture("plans_100.jsonl"))) {
    const json j = json::parse(line);
    const std::string bg = j["captions"]["background"], obj = j["captions"]["objects"];
    // Join oracle with an independent whitespace collapse.
    std::string joined = bg + " " + obj, expected;
    for (char c : joined) {
      const bool space = std::isspace(static_cast<unsigned char>(c));
      if (space && (expected.empty() || expected.back() == ' ')) continue;
      expected += space ? ' ' : c;
    }
    while (!expected.empty() && expected.back() == ' ') expected.pop_back();
    CHECK(assemble_image_prompt(plan_with(bg, obj)) == expected);
  }
}

TEST_CASE("split_sentences keeps delimiters") {
  CHECK(split_sentences("One. Two! Three? Four") ==
        std::vector<std::string>{"One.", "Two!", "Three?", "Four"});
  CHECK(split_sentences("Price 3.50 today. Done.") ==
        std::vector<std::string>{"Price 3.50 today.", "Done."});
  CHECK(split_sentences("  ").empty());
}

TEST_CASE("word token counter") {
  WordTokenCounter c;
  CHECK(c.count("") == 0);
  CHECK(c.count("one") == 2);
  CHECK(c.count("a b c d e f g h i j") == 13);
}

TEST_CASE("fit_prompt no-op when within budget") {
  WordCounter c;
  const std::string p = "Short prompt.  Still short.";
  for (FitMode mode : {FitMode::kChunk, FitMode::kDrop}) {
    const auto r = fit_prompt(p, c, 77, mode, 1);
    CHECK(r.chunks == std::vector<std::string>{p});
    CHECK_FALSE(r.truncated);
  }
}

TEST_CASE("three 40-token sentences at budget 77") {
  WordCounter c;
  const std::string s1 = sentence_of(39, "a"), s2 = sentence_of(39, "b"), s3 = sentence_of(39, "c");
  // sentence_of(39) has 39 words plus the trailing period on the last word: 39 tokens; add one.
  const std::string p = "x " + s1 + " y " + s2 + " z " + s3;
  const auto sentences = split_sentences(p);
  REQUIRE(sentences.size() == 3);
  for (const auto& s : sentences) REQUIRE(c.count(s) == 40);

  const auto chunked = fit_prompt(p, c, 77, FitMode::kChunk);
  CHECK(chunked.chunks == sentences);
  CHECK(chunked.chunks.size() == min_chunks_brute_force({40, 40, 40}, 77));

  const auto d1 = fit_prompt(p, c, 77, FitMode::kDrop, 9);
  const auto d2 = fit_prompt(p, c, 77, FitMode::kDrop, 9);
  CHECK(d1.chunks == d2.chunks);
  REQUIRE(d1.chunks.size() == 1);
  CHECK(std::find(sentences.begin(), sentences.end(), d1.chunks[0]) != sentences.end());
}

TEST_CASE("greedy chunking matches the exhaustive packer") {
  WordCounter c;
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const size_t n = 1 + uniform_below(rng, 9);
    const size_t budget = 10 + uniform_below(rng, 68);
    std::vector<size_t> costs;
    std::string prompt;
    for (size_t i = 0; i < n; ++i) {
      costs.push_back(1 + uniform_below(rng, budget));
      prompt += (i ? " " : "") + sentence_of(costs.back(), "w" + std::to_string(i) + "_");
    }
    size_t total = 0;
    for (size_t v : costs) total += v;
    const auto r = fit_prompt(prompt, c, budget, FitMode::kChunk);
    if (total <= budget) {
      CHECK(r.chunks.size() == 1);
      continue;
    }
    CHECK(r.chunks.size() == min_chunks_brute_force(costs, budget));
    for (const auto& chunk : r.chunks) CHECK(c.count(chunk) <= budget);
  }
}

TEST_CASE("oversized sentences") {
  WordCounter c;
  const std::string p = sentence_of(30, "a") + " " + sentence_of(5, "b");
  try {
    fit_prompt(p, c, 20, FitMode::kChunk);
    FAIL("expected unsatisfiable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUnsatisfiable);
  }
  const auto r = fit_prompt(sentence_of(30, "a") + " " + sentence_of(30, "b"), c, 20, FitMode::kDrop, 3);
  CHECK(r.truncated);
  REQUIRE(r.chunks.size() == 1);
  CHECK(c.count(r.chunks[0]) == 20);
}

TEST_CASE("generate_design_image: determinism, chunks and replay log") {
  MockImageGenClient client;
  WordTokenCounter counter;
  ImageGenOptions opt;
  opt.width_px = 64;
  opt.height_px = 48;
  opt.seed = 4;
  const auto plan = plan_with("A warm beige backdrop.", "A coffee cup at lower left.");
  const auto a = generate_design_image(client, plan, counter, opt);
  const auto b = generate_design_image(client, plan, counter, opt);
  CHECK(a == b);
  CHECK(a.width() == 64);
  CHECK(a.height() == 48);

  const auto bg_only = plan_with("A warm beige backdrop.", "");
  generate_design_image(client, bg_only, counter, opt);
  CHECK(client.requests().back().prompt_chunks == std::vector<std::string>{"A warm beige backdrop."});

  for (const auto& line : testing::read_lines(fixture("plans_100.jsonl"))) {
    const json j = json::parse(line);
    const auto p = plan_with(j["captions"]["background"], j["captions"]["objects"]);
    generate_design_image(client, p, counter, opt);
    std::string logged;
    const auto log = client.requests();
    for (const auto& chunk : log.back().prompt_chunks) logged += chunk + " ";
    for (const auto& s : split_sentences(assemble_image_prompt(p))) CHECK(contains(logged, s));
  }

  MockImageGenClient failing(nullptr, true);
  CHECK_THROWS_AS(generate_design_image(failing, plan, counter, opt), Error);
}
