#include <doctest.h>

#include <fstream>
#include <set>

#include "designpipe/error.hpp"
#include "designpipe/mock_backends.hpp"
#include "designpipe/synthesis.hpp"
#include "designpipe/text_util.hpp"
#include "helpers.hpp"

using namespace designpipe;
using testing::fixture;

namespace {

std::vector<DesignDocument> corpus_docs() {
  std::vector<DesignDocument> docs;
  for (const char* id : {"a_market", "b_concert", "c_small", "d_launch", "e_retreat"}) {
    std::ifstream in(fixture(std::string("corpus/documents/") + id + ".json"));
    docs.push_back(parse_document(std::string(std::istreambuf_iterator<char>(in), {})));
  }
  return docs;
}

DesignDocument text_only(int w, int h) {
  return parse_document(R"({"id":"t","canvas":{"width_px":)" + std::to_string(w) +
                        R"(,"height_px":)" + std::to_string(h) +
                        R"(},"layers":[{"kind":"text","text":"Hello","font_family":"Test Mono","font_size_px":40,"color":"#000000","left":0.1,"top":0.1,"width":0.5}]})");
}

DesignPlan sample_plan() {
  DesignPlan p;
  p.description = "A poster.";
  p.keywords = {"red"};
  p.captions = {"Red paper background.", "A lamp in the middle."};
  p.headings.heading = {"Hello"};
  return p;
}

struct Clients {
  std::shared_ptr<CallCounter> counter = std::make_shared<CallCounter>();
  MockMultimodalClient extractor{mock_extraction_responder(), counter};
  MockTextGenClient text{mock_text_responder(), counter};
};

std::vector<std::pair<std::string, std::string>> journal_keys(const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& line : testing::read_lines(path)) {
    const json j = json::parse(line);
    keys.emplace_back(j["doc_id"], j["stage"]);
  }
  return keys;
}

}  // namespace

TEST_CASE("extraction items and prompts") {
  const auto& items = extraction_items();
  REQUIRE(items.size() == 4);
  CHECK(items[0].kind == PlanItem::kDescription);
  CHECK(items[1].kind == PlanItem::kKeywords);
  CHECK(items[2].kind == PlanItem::kCaptions);
  CHECK(items[3].kind == PlanItem::kHeadings);
  const auto headings = render_extraction_prompt(items[3], {"Fresh Picks", "8am"});
  CHECK(contains(headings, R"(Texts on the design: ["Fresh Picks","8am"])"));
  CHECK_FALSE(contains(headings, "{texts}"));
  CHECK(render_extraction_prompt(items[0], {"x"}) == items[0].prompt_template);
}

TEST_CASE("plan fragments follow each item's sub-schema") {
  auto d = parse_plan_fragment(PlanItem::kDescription, R"(Sure! {"description": "  A red poster. "})");
  CHECK(d.value == json{{"description", "A red poster."}});
  auto k = parse_plan_fragment(PlanItem::kKeywords, R"({"keywords": "red, sale , "})");
  CHECK(k.value == json{{"keywords", {"red", "sale"}}});
  auto h = parse_plan_fragment(PlanItem::kHeadings, R"({"heading": "Big Sale"})");
  CHECK(h.value["headings"]["heading"] == json{"Big Sale"});
  CHECK(h.value["headings"]["subheading"] == json::array());
  try {
    parse_plan_fragment(PlanItem::kCaptions, R"({"captions": {"background": "Red."}})");
    FAIL("expected invalid plan");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidPlan);
  }
  CHECK_THROWS_AS(parse_plan_fragment(PlanItem::kKeywords, "none"), Error);
  try {
    parse_plan_fragment(PlanItem::kKeywords, "no json at all");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNoJsonFound);
  }
}

TEST_CASE("extract_plan_item retries with consecutive seeds") {
  std::vector<uint64_t> seeds;
  MockMultimodalClient client([&](const RasterImage&, const std::string&, const SamplingParams& s) {
    seeds.push_back(s.seed);
    if (seeds.size() == 1) return std::string(R"({"captions": {"background": "Red."}})");
    return std::string(R"({"captions": {"background": "Red.", "objects": "A lamp."}})");
  });
  const RasterImage img(8, 8);
  const auto f = extract_plan_item(client, img, extraction_items()[2], 7, 3);
  CHECK(seeds == std::vector<uint64_t>{7, 8});
  CHECK(f.value["captions"]["objects"] == "A lamp.");

  MockMultimodalClient never([](const RasterImage&, const std::string&, const SamplingParams&) {
    return std::string(kMockRefusal);
  });
  try {
    extract_plan_item(never, img, extraction_items()[0], 0, 2);
    FAIL("expected exhaustion");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kGenerationExhausted);
    CHECK(never.calls() == 2);
  }
}

TEST_CASE("merge_extractions") {
  const DesignPlan plan = sample_plan();
  const json pj = plan_to_json(plan);
  std::vector<PlanFragment> fragments;
  for (const auto& item : extraction_items()) {
    const std::string key(to_string(item.kind));
    fragments.push_back({item.kind, json{{key, pj[key]}}});
  }
  CHECK(merge_extractions(fragments) == plan);
  fragments.pop_back();
  try {
    merge_extractions(fragments);
    FAIL("expected missing fragment");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kMissingFragment);
    CHECK(e.detail() == "headings");
  }
}

TEST_CASE("split then merge reproduces fixture plans") {
  for (const auto& line : testing::read_lines(fixture("plans_100.jsonl"))) {
    const DesignPlan plan = parse_design_plan(line);
    const json pj = plan_to_json(plan);
    std::vector<PlanFragment> fragments;
    // Reverse order: merging must not depend on arrival order.
    for (auto it = extraction_items().rbegin(); it != extraction_items().rend(); ++it) {
      const std::string key(to_string(it->kind));
      fragments.push_back(parse_plan_fragment(it->kind, json{{key, pj[key]}}.dump()));
    }
    CHECK(merge_extractions(fragments) == plan);
  }
}

TEST_CASE("intention prompt and reply cleanup") {
  DocumentMetadata meta;
  meta.title = "Spring Market";
  const auto p = build_intention_prompt(meta, {"Fresh Picks", "  ", "8am\nto 1pm"});
  CHECK(contains(p, "\ntitle: Spring Market\n"));
  CHECK(contains(p, "\nformat: unknown\n"));
  CHECK(contains(p, "\nkeywords: unknown\n"));
  CHECK(contains(p, "\ntexts: [\"Fresh Picks\",\"8am to 1pm\"]\n"));
  CHECK(p.ends_with("Request:"));
  meta.keywords = {"spring", " market "};
  CHECK(contains(build_intention_prompt(meta, {}), "\nkeywords: spring, market\n"));
  CHECK(contains(build_intention_prompt(meta, {}), "\ntexts: unknown\n"));

  CHECK(parse_intention("Request: \"Make a poster for the fair.\"").text() == "Make a poster for the fair.");
  CHECK(parse_intention(R"(```json
{"intention": "Design a flyer."}
```)").text() == "Design a flyer.");
  CHECK_THROWS_AS(parse_intention("  \"\"  "), Error);
}

TEST_CASE("training pairs respect the area threshold") {
  const auto fonts = testing::test_fonts();
  const DesignPlan plan = sample_plan();
  const AssetResolver none = [](std::string_view) { return std::optional<RasterImage>(); };
  CHECK_FALSE(make_training_pair(text_only(700, 700), plan, none, fonts).has_value());  // 490000
  const auto at = make_training_pair(text_only(1000, 500), plan, none, fonts);            // 500000
  REQUIRE(at.has_value());
  CHECK(make_training_pair(text_only(800, 750), plan, none, fonts).has_value());        // 600000
  CHECK(at->prompt_text == "Red paper background. A lamp in the middle.");
  CHECK(at->source_doc_id == "t");
  CHECK(at->target == RasterImage(1000, 500, std::array<uint8_t, 4>{255, 255, 255, 255}));
  CHECK(make_training_pair(text_only(700, 700), plan, none, fonts, 490000).has_value());
  CHECK(training_pair_to_json({"p", "targets/t.png", "t"}) ==
        json{{"prompt_text", "p"}, {"target_image_ref", "targets/t.png"}, {"source_doc_id", "t"}});
}

TEST_CASE("journal persists, ignores duplicates and drops a partial tail") {
  const auto dir = testing::temp_dir("journal");
  const auto path = dir / "j.jsonl";
  {
    ProgressJournal j(path);
    j.append("a", "extract.keywords", json{{"keywords", {"x"}}});
    j.append("a", "extract.keywords", json{{"keywords", {"y"}}});
    j.append("b", "intention", "Make a flyer.");
    CHECK(j.size() == 2);
  }
  {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << R"({"doc_id":"c","sta)";
  }
  ProgressJournal j(path);
  CHECK(j.size() == 2);
  CHECK(j.find("a", "extract.keywords") == json{{"keywords", {"x"}}});
  CHECK(j.find("b", "intention") == json("Make a flyer."));
  CHECK_FALSE(j.find("c", "result").has_value());
  j.append("c", "result", json{{"status", "ok"}});
  const auto keys = journal_keys(path);
  CHECK(keys.size() == 3);
  CHECK(keys.back() == std::pair<std::string, std::string>{"c", "result"});
}

TEST_CASE("exemplar store from the fixture corpus") {
  const auto docs = corpus_docs();
  const auto fonts = testing::test_fonts();
  const auto assets = directory_assets(fixture("corpus/assets"));
  const auto dir = testing::temp_dir("store");
  Clients c;
  ProgressJournal journal(dir / "journal.jsonl");
  const auto result = build_exemplar_store(docs, c.extractor, c.text, assets, fonts, journal, {});
  CHECK(result.report.documents == 5);
  CHECK(result.report.exemplars == 5);
  CHECK(result.report.client_sequences == 5);
  CHECK(result.report.failures.empty());
  CHECK(c.extractor.calls() == 20);
  CHECK(c.text.calls() == 5);
  REQUIRE(result.exemplar_doc_ids[1] == "b_concert");
  const auto& concert = result.exemplars[1];
  CHECK(plan_violations(concert.plan).empty());
  CHECK(contains(concert.intention.text(), "Jazz Night"));
  std::vector<std::string> printed = concert.plan.headings.heading;
  printed.insert(printed.end(), concert.plan.headings.subheading.begin(),
                 concert.plan.headings.subheading.end());
  CHECK(printed == document_texts(docs[1]));

  // A finished journal answers everything without a single call.
  Clients again;
  ProgressJournal reopened(dir / "journal.jsonl");
  const auto replay = build_exemplar_store(docs, again.extractor, again.text, assets, fonts, reopened, {});
  CHECK(again.extractor.calls() + again.text.calls() == 0);
  CHECK(replay.report.journal_hits == 5);
  CHECK(replay.report.client_sequences == 0);
  CHECK(replay.exemplars == result.exemplars);

  // Workers do not change the result.
  Clients parallel;
  ProgressJournal fresh(dir / "parallel.jsonl");
  SynthesisOptions opt;
  opt.workers = 4;
  CHECK(build_exemplar_store(docs, parallel.extractor, parallel.text, assets, fonts, fresh, opt)
            .exemplars == result.exemplars);
}

TEST_CASE("exemplar store records failures and resumes") {
  const auto docs = corpus_docs();
  const auto fonts = testing::test_fonts();
  const auto assets = directory_assets(fixture("corpus/assets"));
  const auto dir = testing::temp_dir("store_resume");
  const auto base = mock_text_responder();
  // The concert document only ever gets an empty intention.
  auto refusing = [&](const std::string& prompt, const SamplingParams& s) {
    return contains(prompt, "title: Jazz Night") ? std::string("\"\"") : base(prompt, s);
  };
  auto run = [&](std::optional<size_t> limit, int64_t* calls) {
    auto counter = std::make_shared<CallCounter>();
    MockMultimodalClient extractor(mock_extraction_responder(), counter);
    MockTextGenClient text(refusing, counter);
    ProgressJournal journal(dir / "journal.jsonl");
    SynthesisOptions opt;
    opt.max_documents = limit;
    auto r = build_exemplar_store(docs, extractor, text, assets, fonts, journal, opt);
    *calls = extractor.calls() + text.calls();
    return r;
  };
  int64_t calls = 0;
  const auto first = run(2, &calls);
  CHECK(first.report.pending == 3);
  CHECK(first.report.exemplars == 1);
  REQUIRE(first.report.failures.size() == 1);
  CHECK(first.report.failures[0].doc_id == "b_concert");
  CHECK(first.report.failures[0].stage == "intention");
  CHECK(calls == 8 + 1 + 3);

  const auto second = run(std::nullopt, &calls);
  CHECK(second.report.pending == 0);
  CHECK(second.report.journal_hits == 2);
  CHECK(second.report.client_sequences == 3);
  CHECK(second.report.exemplars == 4);
  CHECK(second.report.failures.size() == 1);
  CHECK(calls == 3 * 5);

  const auto keys = journal_keys(dir / "journal.jsonl");
  CHECK(std::set(keys.begin(), keys.end()).size() == keys.size());

  // Same exemplars as a run that was never interrupted.
  const auto dir2 = testing::temp_dir("store_straight");
  auto counter = std::make_shared<CallCounter>();
  MockMultimodalClient extractor(mock_extraction_responder(), counter);
  MockTextGenClient text(refusing, counter);
  ProgressJournal journal(dir2 / "journal.jsonl");
  CHECK(build_exemplar_store(docs, extractor, text, assets, fonts, journal, {}).exemplars ==
        second.exemplars);
}

TEST_CASE("backend failures abort the store build") {
  const auto docs = corpus_docs();
  const auto fonts = testing::test_fonts();
  MockMultimodalClient broken([](const RasterImage&, const std::string&, const SamplingParams&) -> std::string {
    throw Error(ErrorKind::kBackendFailure, "connection refused");
  });
  MockTextGenClient text(mock_text_responder());
  ProgressJournal journal(testing::temp_dir("store_backend") / "j.jsonl");
  try {
    build_exemplar_store(docs, broken, text, directory_assets(fixture("corpus/assets")), fonts, journal, {});
    FAIL("expected backend failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kBackendFailure);
  }
}
