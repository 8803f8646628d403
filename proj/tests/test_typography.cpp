#include <doctest.h>

#include "designpipe/error.hpp"
#include "designpipe/mock_backends.hpp"
#include "designpipe/random.hpp"
#include "designpipe/text_util.hpp"
#include "designpipe/typography.hpp"
#include "helpers.hpp"

using namespace designpipe;
using testing::fixture;

namespace {

DesignPlan plan_with_headings(std::vector<std::string> heading, std::vector<std::string> sub) {
  DesignPlan p;
  p.description = "A sale poster.";
  p.keywords = {"sale"};
  p.captions = {"Beige.", "A cup."};
  p.headings = {std::move(heading), std::move(sub)};
  return p;
}

TextLayer layer(double left, double top, double width, double size = 20) {
  TextLayer t;
  t.text = "Hello";
  t.font_family = "Test Mono";
  t.font_size_px = size;
  t.left = left;
  t.top = top;
  t.width = width;
  return t;
}

std::string element_json(const std::string& overrides) {
  return R"({"text":"SALE","font_family":"Test Mono","font_size_px":40,"color":"#112233","left":0.1,"top":0.1,"width":0.5)" +
         overrides + "}";
}

}  // namespace

TEST_CASE("flatten_headings") {
  CHECK(flatten_headings(plan_with_headings({"SALE"}, {"50% off"})) ==
        std::vector<std::string>{"SALE", "50% off"});
  CHECK(flatten_headings(plan_with_headings({"A", "A"}, {})) == std::vector<std::string>{"A", "A"});
  for (const auto& line : testing::read_lines(fixture("plans_100.jsonl"))) {
    const auto plan = plan_from_json(json::parse(line));
    std::vector<std::string> expected;
    for (const auto& h : plan.headings.heading) expected.push_back(h);
    for (const auto& s : plan.headings.subheading) expected.push_back(s);
    CHECK(flatten_headings(plan) == expected);
    CHECK(flatten_headings(plan).size() == plan.headings.heading.size() + plan.headings.subheading.size());
  }
}

TEST_CASE("build_typography_request") {
  const auto plan = plan_with_headings({"SALE", "Big Day"}, {"50% off", "Today only"});
  const std::string a = build_typography_request(plan, {1080, 1350});
  for (const auto& t : flatten_headings(plan)) CHECK(contains(a, t));
  CHECK(build_typography_request(plan, {1080, 1350}) == a);
  const std::string b = build_typography_request(plan, {800, 600});
  std::string normalized = b;
  normalized.replace(normalized.find("800 x 600"), 9, "1080 x 1350");
  CHECK(normalized == a);
  CHECK(a != b);
}

TEST_CASE("parse_typography") {
  const auto fonts = testing::test_fonts();
  const Canvas canvas{1000, 1000};
  const auto two = parse_typography(
      "```json\n{\"texts\": [" + element_json("") + "," + element_json(R"(,"text_align":"center")") +
          "]}\n```",
      canvas, fonts);
  CHECK(two.spec.texts.size() == 2);
  CHECK(two.warnings.empty());
  CHECK(two.spec.texts[1].text_align == TextAlign::kCenter);

  std::string bad_color = element_json("");
  bad_color.replace(bad_color.find("#112233"), 7, "#GGGGGG");
  try {
    parse_typography("{\"texts\": [" + bad_color + "]}", canvas, fonts);
    FAIL("expected invalid typography");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidTypography);
    CHECK(e.detail() == "texts[0].color");
  }

  std::string far_right = element_json("");
  far_right.replace(far_right.find("\"left\":0.1"), 10, "\"left\":1.4");
  const auto clamped = parse_typography("{\"texts\": [" + far_right + "]}", canvas, fonts);
  CHECK(clamped.spec.texts[0].left == 0.95);
  CHECK(clamped.warnings.size() == 1);

  try {
    parse_typography("I would place the text at the top.", canvas, fonts);
    FAIL("expected no json");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNoJsonFound);
  }
}

TEST_CASE("repair_spec examples") {
  const auto fonts = testing::test_fonts();
  const Canvas canvas{1000, 1000};
  TypographySpec ok{{layer(0.1, 0.1, 0.5), layer(0.0, 0.8, 1.0)}};
  const auto same = repair_spec(ok, canvas, fonts);
  CHECK(same.spec == ok);
  CHECK(same.warnings.empty());

  TypographySpec unknown{{layer(0.1, 0.1, 0.5)}};
  unknown.texts[0].font_family = "NoSuchFont";
  const auto fixed = repair_spec(unknown, canvas, fonts);
  CHECK(fixed.spec.texts[0].font_family == fonts.default_family());
  CHECK(fixed.warnings.size() == 1);

  // Clamp-formula oracle: the box keeps 10% of its width inside.
  TypographySpec right{{layer(1.4, 0.1, 0.5)}};
  CHECK(repair_spec(right, canvas, fonts).spec.texts[0].left == doctest::Approx(1.0 - 0.1 * 0.5));
  TypographySpec left{{layer(-3.0, 0.1, 0.5)}};
  CHECK(repair_spec(left, canvas, fonts).spec.texts[0].left == doctest::Approx(-0.9 * 0.5));
  // Height from lines x line height x size: 2 lines x 1.2 x 100 px on a 1000 px canvas.
  TypographySpec low{{layer(0.1, 2.0, 0.5, 100)}};
  low.texts[0].text = "a\nb";
  CHECK(repair_spec(low, canvas, fonts).spec.texts[0].top == doctest::Approx(1.0 - 0.1 * 0.24));

  TypographySpec sizes{{layer(0.1, 0.1, 0.5, 1.0), layer(0.1, 0.1, 0.5, 5000)}};
  const auto s = repair_spec(sizes, canvas, fonts).spec;
  CHECK(s.texts[0].font_size_px == 4.0);
  CHECK(s.texts[1].font_size_px == 1000.0);
}

TEST_CASE("repair_spec is idempotent and keeps boxes visible") {
  const auto fonts = testing::test_fonts();
  Rng rng(11);
  auto uni = [&](double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(uniform_below(rng, 1000001)) / 1e6;
  };
  for (int i = 0; i < 300; ++i) {
    const Canvas canvas{static_cast<int>(100 + uniform_below(rng, 2000)),
                        static_cast<int>(100 + uniform_below(rng, 2000))};
    TypographySpec spec;
    for (uint64_t k = uniform_below(rng, 5); k > 0; --k) {
      TextLayer t = layer(uni(-5, 5), uni(-5, 5), uni(0.01, 3), uni(0.5, 3000));
      t.font_family = uniform_below(rng, 3) == 0 ? "Mystery" : "Test Wide";
      t.line_height = uni(0.5, 3);
      if (uniform_below(rng, 2)) t.text = "a\nb\nc";
      spec.texts.push_back(t);
    }
    const auto once = repair_spec(spec, canvas, fonts);
    const auto twice = repair_spec(once.spec, canvas, fonts);
    CHECK(twice.spec == once.spec);
    CHECK(twice.warnings.empty());
    for (const auto& t : once.spec.texts) {
      CHECK(keeps_visible_fraction(t, canvas));
      CHECK(fonts.contains(t.font_family));
    }
  }
}

TEST_CASE("generate_typography retry contract") {
  const auto fonts = testing::test_fonts();
  const Canvas canvas{1000, 1000};
  const auto plan = plan_with_headings({"SALE"}, {});
  const RasterImage image(16, 16, std::array<uint8_t, 4>{255, 255, 255, 255});
  const std::string valid = "{\"texts\": [" + element_json("") + "]}";
  TypographyOptions opt;

  MockMultimodalClient fixed([&](const RasterImage&, const std::string&, const SamplingParams&) { return valid; });
  auto r = generate_typography(fixed, plan, image, canvas, fonts, opt);
  CHECK(r.attempts == 1);
  CHECK(r.value.spec.texts.size() == 1);

  int n = 0;
  MockMultimodalClient flaky([&](const RasterImage&, const std::string&, const SamplingParams&) {
    return ++n == 1 ? std::string("{\"texts\": [{\"text\": 3}]}") : valid;
  });
  CHECK(generate_typography(flaky, plan, image, canvas, fonts, opt).attempts == 2);

  MockMultimodalClient never([](const RasterImage&, const std::string&, const SamplingParams&) {
    return std::string("no");
  });
  try {
    generate_typography(never, plan, image, canvas, fonts, opt);
    FAIL("expected exhaustion");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kGenerationExhausted);
  }
}

TEST_CASE("mock typography backend places texts in the upper third") {
  const auto fonts = testing::test_fonts();
  const Canvas canvas{1080, 1350};
  const auto plan = plan_with_headings({"SALE"}, {"50% off", "Today"});
  const RasterImage light(32, 32, std::array<uint8_t, 4>{240, 240, 240, 255});
  const RasterImage dark(32, 32, std::array<uint8_t, 4>{10, 10, 10, 255});
  MockMultimodalClient client(mock_typography_responder(fonts.default_family()));
  const auto r = generate_typography(client, plan, light, canvas, fonts, {});
  CHECK(r.value.warnings.empty());
  REQUIRE(r.value.spec.texts.size() == 3);
  const auto& t = r.value.spec.texts;
  CHECK(t[0].text == "SALE");
  CHECK(t[0].font_size_px == std::round(0.08 * 1350));
  CHECK(t[1].font_size_px == std::round(0.05 * 1350));
  CHECK(t[2].font_size_px == std::round(0.08 * 1350));
  CHECK(t[0].text_align == TextAlign::kCenter);
  CHECK(t[0].color == Rgb{0x1A, 0x1A, 0x1A});
  for (const auto& x : t) {
    CHECK(x.font_family == fonts.default_family());
    CHECK(x.top + text_box_height(x, canvas) <= 1.0 / 3.0 + 0.05);
  }
  CHECK(t[0].top < t[1].top);
  const auto on_dark = generate_typography(client, plan, dark, canvas, fonts, {});
  CHECK(on_dark.value.spec.texts[0].color == Rgb{255, 255, 255});
}
