#include <doctest.h>

#include <map>

#include "designpipe/digest.hpp"
#include "designpipe/error.hpp"
#include "designpipe/json_util.hpp"
#include "designpipe/random.hpp"
#include "designpipe/raster.hpp"
#include "designpipe/text_util.hpp"

using namespace designpipe;

TEST_CASE("extract_json_object tolerates fences and prose") {
  CHECK(extract_json_object("```json\n{\"a\": 1}\n```") == json{{"a", 1}});
  CHECK(extract_json_object("Sure! Here it is: {\"a\": {\"b\": \"}\"}} hope that helps") ==
        json{{"a", {{"b", "}"}}}});
  CHECK(extract_json_object("{'a': 'x', 'b': [1, 2,],}") == json{{"a", "x"}, {"b", {1, 2}}});
  CHECK_THROWS_AS(extract_json_object("Sorry, I cannot help"), Error);
  try {
    extract_json_object("no braces here");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNoJsonFound);
  }
  CHECK_FALSE(try_extract_json_object("[1, 2]").has_value());
}

TEST_CASE("quantize rounds to six decimals and folds negative zero") {
  CHECK(quantize(0.1234564) == 0.123456);
  CHECK(quantize(0.1234566) == 0.123457);
  CHECK(std::signbit(quantize(-0.0000001)) == false);
  CHECK(canonical_dump(json{{"b", 1}, {"a", 2}}) == "{\"a\":2,\"b\":1}");
}

TEST_CASE("sha256 and base64 match known vectors") {
  CHECK(sha256_hex(std::string_view("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const std::string text = "hello world";
  const std::vector<uint8_t> bytes(text.begin(), text.end());
  CHECK(base64_encode(bytes) == "aGVsbG8gd29ybGQ=");
  CHECK(base64_decode("aGVsbG8gd29ybGQ=") == bytes);
  CHECK(base64_decode("") == std::vector<uint8_t>{});
}

TEST_CASE("text helpers") {
  CHECK(trim("  a b \n") == "a b");
  CHECK(normalize_whitespace(" a \t b\n\nc  ") == "a b c");
  CHECK(split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
  CHECK(utf8_encode(to_upper(utf8_decode("café ñ"))) == "CAFÉ Ñ");
  CHECK(utf8_decode("\xE2\x82\xAC").size() == 1);
}

TEST_CASE("uniform_below is unbiased over a small range") {
  Rng rng(42);
  std::map<uint64_t, int> counts;
  const int n = 60000;
  for (int i = 0; i < n; ++i) counts[uniform_below(rng, 6)]++;
  CHECK(counts.size() == 6);
  for (const auto& [value, count] : counts) {
    CHECK(value < 6);
    CHECK(std::abs(count - n / 6) < 500);
  }
}

TEST_CASE("PNG round trip preserves pixels") {
  RasterImage img(7, 5, std::array<uint8_t, 4>{10, 20, 30, 255});
  img.at(3, 2)[0] = 200;
  img.at(6, 4)[3] = 17;
  const auto bytes = encode_png(img);
  CHECK(decode_png(bytes) == img);
  CHECK(encode_png(img) == bytes);
  const std::vector<uint8_t> junk = {1, 2, 3, 4};
  CHECK_THROWS_AS(decode_png(junk), Error);
}

TEST_CASE("resize and fit") {
  RasterImage img(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      uint8_t* p = img.at(x, y);
      p[0] = static_cast<uint8_t>(x * 60);
      p[1] = static_cast<uint8_t>(y * 60);
      p[3] = 255;
    }
  CHECK(resize_bilinear(img, 4, 4) == img);
  CHECK(fit_to_canvas(img, 4, 4) == img);
  // 2:1 target keeps the middle rows of a square source.
  const RasterImage wide = fit_to_canvas(img, 4, 2);
  CHECK(wide == resize_bilinear(crop(img, 0, 1, 4, 2), 4, 2));
  CHECK(wide.width() == 4);
  CHECK(wide.height() == 2);
}

TEST_CASE("blend_over") {
  uint8_t dst[4] = {0, 0, 0, 255};
  const uint8_t red[3] = {255, 0, 0};
  blend_over(dst, red, 255);
  CHECK(dst[0] == 255);
  blend_over(dst, std::array<uint8_t, 3>{0, 0, 255}.data(), 0);
  CHECK(dst[0] == 255);
  CHECK(dst[2] == 0);
  uint8_t half[4] = {0, 0, 0, 255};
  blend_over(half, red, 128);
  CHECK(half[0] == 128);
  CHECK(half[3] == 255);
}
