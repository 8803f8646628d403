#include <doctest.h>

#include <cmath>
#include <set>

#include "designpipe/digest.hpp"
#include "designpipe/error.hpp"
#include "designpipe/renderer.hpp"
#include "designpipe/text_util.hpp"
#include "designpipe/typography.hpp"
#include "helpers.hpp"

using namespace designpipe;
using testing::fixture;

namespace {

TextLayer mono(std::string text, double size, double left, double top, double width) {
  TextLayer t;
  t.text = std::move(text);
  t.font_family = "Test Mono";
  t.font_size_px = size;
  t.color = {200, 30, 40};
  t.left = left;
  t.top = top;
  t.width = width;
  return t;
}

RasterImage blank(int w, int h, uint8_t v = 255) {
  return RasterImage(w, h, std::array<uint8_t, 4>{v, v, v, 255});
}

std::set<std::pair<int, int>> changed(const RasterImage& a, const RasterImage& b) {
  std::set<std::pair<int, int>> out;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x)
      if (!std::equal(a.at(x, y), a.at(x, y) + 4, b.at(x, y))) out.insert({x, y});
  return out;
}

// Procedural stand-in for any asset id.
AssetResolver procedural_assets() {
  return [](std::string_view id) -> std::optional<RasterImage> {
    const uint64_t h = hash64(id);
    RasterImage img(24, 16);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 24; ++x) {
        uint8_t* p = img.at(x, y);
        p[0] = static_cast<uint8_t>(h + x * 9);
        p[1] = static_cast<uint8_t>((h >> 8) + y * 13);
        p[2] = static_cast<uint8_t>((h >> 16) + x * y);
        p[3] = static_cast<uint8_t>(128 + (h >> 24) % 128);
      }
    return img;
  };
}

// Device-space corners of a rectangle rotated about (cx, cy), counterclockwise on screen.
std::array<std::pair<double, double>, 4> rotated_rect(double l, double t, double r, double b,
                                                       double cx, double cy, double deg) {
  const double a = deg * M_PI / 180.0, c = std::cos(a), s = std::sin(a);
  std::array<std::pair<double, double>, 4> pts = {std::pair{l, t}, {r, t}, {r, b}, {l, b}};
  for (auto& [x, y] : pts) {
    const double dx = x - cx, dy = y - cy;
    x = cx + c * dx + s * dy;
    y = cy - s * dx + c * dy;
  }
  return pts;
}

bool near_rect(double px, double py, const std::array<std::pair<double, double>, 4>& poly, double slack) {
  // Inside the convex polygon grown by `slack` (distance to each edge line).
  for (size_t i = 0; i < 4; ++i) {
    const auto [x0, y0] = poly[i];
    const auto [x1, y1] = poly[(i + 1) % 4];
    const double ex = x1 - x0, ey = y1 - y0, len = std::hypot(ex, ey);
    const double cross = (ex * (py - y0) - ey * (px - x0)) / len;
    // Orientation-independent: compare against the polygon's opposite corner.
    const auto [ox, oy] = poly[(i + 2) % 4];
    const double ref = ex * (oy - y0) - ey * (ox - x0);
    if ((ref > 0 ? cross : -cross) < -slack) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("line width of a monospace run") {
  const auto fonts = testing::test_fonts();
  auto t = mono("AB", 20, 0, 0, 1);
  t.letter_spacing_px = 2;
  const auto layout = layout_text(t, {200, 100}, fonts, true);
  REQUIRE(layout.lines.size() == 1);
  CHECK(layout.lines[0].line_width_px == 22.0);
  CHECK(layout.lines[0].glyphs[0].advance_px == 10.0);
  CHECK(layout.lines[0].glyphs[1].x_px == 12.0);
  CHECK(layout_text(mono("", 20, 0, 0, 1), {200, 100}, fonts, true).lines.empty());
}

TEST_CASE("wrapped centered lines") {
  const auto fonts = testing::test_fonts();
  // "A B" is 30 px wide at size 20; a 25 px box forces a wrap.
  const auto t = [] {
    auto x = mono("A B", 20, 0.1, 0.0, 0.25);
    x.text_align = TextAlign::kCenter;
    return x;
  }();
  const auto layout = layout_text(t, {100, 100}, fonts, true);
  REQUIRE(layout.lines.size() == 2);
  for (const auto& line : layout.lines) {
    CHECK(line.line_width_px == 10.0);
    CHECK(line.origin_x_px == doctest::Approx(10.0 + (25.0 - 10.0) / 2.0));
  }
  CHECK(layout.lines[1].baseline_y_px - layout.lines[0].baseline_y_px == doctest::Approx(24.0));
  CHECK(layout.lines[0].baseline_y_px == doctest::Approx(16.0));
  CHECK(layout.box.height_px == doctest::Approx(48.0));
  CHECK(layout_text(t, {100, 100}, fonts, false).lines.size() == 1);
}

TEST_CASE("alignment, oversized words, capitalize and explicit breaks") {
  const auto fonts = testing::test_fonts();
  auto t = mono("abc\nd", 20, 0.2, 0.1, 0.5);
  t.text_align = TextAlign::kRight;
  t.capitalize = true;
  const auto layout = layout_text(t, {200, 200}, fonts, true);
  REQUIRE(layout.lines.size() == 2);
  CHECK(layout.lines[0].glyphs[0].codepoint == U'A');
  CHECK(layout.lines[0].origin_x_px + layout.lines[0].line_width_px == doctest::Approx(140.0));
  CHECK(t.text == "abc\nd");

  auto wide = mono("tiny enormousword ok", 20, 0.0, 0.0, 0.3);
  const auto wl = layout_text(wide, {200, 200}, fonts, true);
  REQUIRE(wl.lines.size() == 3);
  CHECK(wl.lines[1].line_width_px == 120.0);
  CHECK(wl.lines[1].origin_x_px == 0.0);
}

TEST_CASE("fallback face and missing glyphs") {
  const auto fonts = testing::test_fonts();
  auto t = mono("Ab", 20, 0, 0, 1);
  t.font_family = "Test Wide";
  const auto layout = layout_text(t, {200, 100}, fonts, true);
  CHECK(layout.missing_glyphs.empty());
  CHECK(layout.lines[0].glyphs[0].advance_px == 20.0);   // from Test Wide
  CHECK(layout.lines[0].glyphs[1].advance_px == 10.0);   // lower case from the default face
  CHECK(layout.lines[0].glyphs[1].face->family() == "Test Mono");

  const auto missing = layout_text(mono("aé", 20, 0, 0, 1), {200, 100}, fonts, true);
  CHECK(missing.missing_glyphs == std::vector<char32_t>{0xE9});
  CHECK(missing.lines[0].glyphs.size() == 2);
}

TEST_CASE("rasterize: identity and exact block fill") {
  const auto fonts = testing::test_fonts();
  RasterImage target = blank(60, 40);
  const RasterImage before = target;
  const auto empty = mono("", 20, 0, 0, 1);
  rasterize_layer(layout_text(empty, {60, 40}, fonts, true), empty, target);
  CHECK(target == before);

  // Box at (10, 5); glyph block spans [10, 20) x [5, 25).
  const auto t = mono("A", 20, 10.0 / 60, 5.0 / 40, 0.5);
  rasterize_layer(layout_text(t, {60, 40}, fonts, true), t, target);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 60; ++x) {
      const uint8_t* p = target.at(x, y);
      const bool inside = x >= 10 && x < 20 && y >= 5 && y < 25;
      if (inside) {
        CHECK((p[0] == 200 && p[1] == 30 && p[2] == 40 && p[3] == 255));
      } else {
        CHECK(std::equal(p, p + 4, before.at(x, y)));
      }
    }
}

TEST_CASE("rotation by 180 degrees reflects about the box center") {
  const auto fonts = testing::test_fonts();
  const Canvas canvas{80, 80};
  auto t = mono("AA A", 6, 0.2, 0.3, 0.55);
  t.letter_spacing_px = 1.5;
  RasterImage a = blank(80, 80), b = blank(80, 80);
  const auto layout = layout_text(t, canvas, fonts, true);
  rasterize_layer(layout, t, a);
  auto r = t;
  r.angle_deg = 180;
  rasterize_layer(layout_text(r, canvas, fonts, true), r, b);
  const auto base = changed(a, blank(80, 80));
  const auto rotated = changed(b, blank(80, 80));
  REQUIRE_FALSE(base.empty());
  const double cx = layout.box.left_px + layout.box.width_px / 2;
  const double cy = layout.box.top_px + layout.box.height_px / 2;
  auto has_near = [](const std::set<std::pair<int, int>>& s, int x, int y) {
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        if (s.count({x + dx, y + dy})) return true;
    return false;
  };
  for (const auto& [x, y] : rotated) {
    // Pixel (x, y) covers [x, x+1); its reflection covers [2c-x-1, 2c-x).
    const int rx = static_cast<int>(std::lround(2 * cx - x - 1));
    const int ry = static_cast<int>(std::lround(2 * cy - y - 1));
    CHECK(has_near(base, rx, ry));
  }
  for (const auto& [x, y] : base) {
    const int rx = static_cast<int>(std::lround(2 * cx - x - 1));
    const int ry = static_cast<int>(std::lround(2 * cy - y - 1));
    CHECK(has_near(rotated, rx, ry));
  }
}

TEST_CASE("text pixels stay inside the rotated layer box") {
  const auto fonts = testing::test_fonts();
  const Canvas canvas{200, 150};
  for (double angle : {0.0, 30.0, -72.5, 90.0, 135.0}) {
    auto t = mono("Hello there\nsecond", 14, 0.25, 0.3, 0.5);
    t.angle_deg = angle;
    t.text_align = TextAlign::kCenter;
    const RasterImage bg = blank(200, 150, 250);
    RasterImage out = bg;
    const auto layout = layout_text(t, canvas, fonts, true);
    rasterize_layer(layout, t, out);
    const auto& box = layout.box;
    // Glyph blocks extend from baseline-ascent to baseline+descent, so the
    // last line's descent can reach below the derived box; allow for it.
    const double bottom = std::max(box.top_px + box.height_px,
                                   layout.lines.back().baseline_y_px + layout.descent_px);
    const auto poly = rotated_rect(box.left_px, box.top_px, box.left_px + box.width_px, bottom,
                                   box.left_px + box.width_px / 2, box.top_px + box.height_px / 2,
                                   angle);
    const auto px = changed(out, bg);
    REQUIRE_FALSE(px.empty());
    for (const auto& [x, y] : px) CHECK(near_rect(x + 0.5, y + 0.5, poly, 0.75));
  }
}

TEST_CASE("render_document basics") {
  const auto fonts = testing::test_fonts();
  const auto empty = parse_document(R"({"id":"e","canvas":{"width_px":30,"height_px":20},"layers":[]})");
  CHECK(render_document(empty, nullptr, fonts, true) == blank(30, 20));

  const auto full = parse_document(
      R"({"id":"f","canvas":{"width_px":53,"height_px":37},"layers":[{"kind":"image","source_id":"bg","left":0,"top":0,"width":1,"height":1}]})");
  RasterImage src(11, 7, std::array<uint8_t, 4>{0, 0, 0, 255});
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 11; ++x) src.at(x, y)[0] = static_cast<uint8_t>(x * 20 + y);
  const AssetResolver one = [&](std::string_view) { return std::optional<RasterImage>(src); };
  CHECK(render_document(full, one, fonts, true) == resize_bilinear(src, 53, 37));

  try {
    render_document(full, [](std::string_view) { return std::optional<RasterImage>(); }, fonts, true);
    FAIL("expected missing asset");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kMissingAsset);
    CHECK(e.detail() == "bg");
  }
}

TEST_CASE("documents differ from their stripped version only under glyphs") {
  const auto fonts = testing::test_fonts();
  const auto assets = procedural_assets();
  int compared = 0;
  for (const auto& line : testing::read_lines(fixture("documents_100.jsonl"))) {
    auto doc = parse_document(line);
    // Keep renders small: same fractions on a smaller canvas.
    doc.canvas = {doc.canvas.width_px / 5, doc.canvas.height_px / 5};
    for (auto& l : doc.layers)
      if (auto* t = std::get_if<TextLayer>(&l)) t->font_size_px = std::max(4.0, t->font_size_px / 5);
    const RasterImage full = render_document(doc, assets, fonts, true);
    const RasterImage stripped = render_document(strip_text_layers(doc), assets, fonts, true);
    // Mask oracle: glyph cells of every text layer, rotated, grown by a pixel.
    std::vector<std::array<std::pair<double, double>, 4>> cells;
    for (const auto& l : doc.layers) {
      const auto* t = std::get_if<TextLayer>(&l);
      if (!t) continue;
      const auto layout = layout_text(*t, doc.canvas, fonts, true);
      const double cx = layout.box.left_px + layout.box.width_px / 2;
      const double cy = layout.box.top_px + layout.box.height_px / 2;
      for (const auto& ln : layout.lines)
        for (const auto& g : ln.glyphs)
          cells.push_back(rotated_rect(g.x_px, ln.baseline_y_px - 1.2 * layout.font_size_px,
                                       g.x_px + g.advance_px, ln.baseline_y_px + layout.font_size_px,
                                       cx, cy, t->angle_deg));
    }
    for (const auto& [x, y] : changed(full, stripped)) {
      bool covered = false;
      for (const auto& c : cells) covered = covered || near_rect(x + 0.5, y + 0.5, c, 1.0);
      CHECK(covered);
    }
    if (cells.empty()) CHECK(full == stripped);
    ++compared;
  }
  CHECK(compared == 100);
}

TEST_CASE("layer compositing is sequential") {
  const auto fonts = testing::test_fonts();
  const auto doc = parse_document(
      R"({"id":"c","canvas":{"width_px":60,"height_px":40},"layers":[)"
      R"({"kind":"image","source_id":"x","left":0.1,"top":0.1,"width":0.6,"height":0.7,"opacity":0.6,"angle_deg":20},)"
      R"({"kind":"text","text":"Hi","font_family":"Test Mono","font_size_px":12,"color":"#00FF00","left":0.2,"top":0.2,"width":0.5},)"
      R"({"kind":"image","source_id":"y","left":0.5,"top":0.3,"width":0.4,"height":0.4}]})");
  const auto assets = procedural_assets();
  RasterImage manual = blank(60, 40);
  draw_image_layer(std::get<ImageLayer>(doc.layers[0]), *assets("x"), manual);
  const auto& t = std::get<TextLayer>(doc.layers[1]);
  rasterize_layer(layout_text(t, doc.canvas, fonts, true), t, manual);
  draw_image_layer(std::get<ImageLayer>(doc.layers[2]), *assets("y"), manual);
  CHECK(render_document(doc, assets, fonts, true) == manual);
}

TEST_CASE("render_final") {
  const auto fonts = testing::test_fonts();
  RasterImage bg(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      uint8_t* p = bg.at(x, y);
      p[0] = static_cast<uint8_t>(x * 4);
      p[1] = static_cast<uint8_t>(y * 4);
      p[2] = 90;
      p[3] = 255;
    }
  const Canvas canvas{48, 30};
  CHECK(render_final(bg, TypographySpec{}, canvas, fonts, true) == fit_to_canvas(bg, 48, 30));
  TypographySpec spec{{mono("Sale", 8, 0.1, 0.1, 0.8)}};
  const auto a = encode_png(render_final(bg, spec, canvas, fonts, true));
  const auto b = encode_png(render_final(bg, spec, canvas, fonts, true));
  CHECK(a == b);
}

TEST_CASE("TrueType faces load from a font directory") {
  const std::filesystem::path dejavu = "/usr/share/fonts/truetype/dejavu";
  if (!std::filesystem::exists(dejavu / "DejaVuSans.ttf")) {
    MESSAGE("no system TrueType font available; skipped");
    return;
  }
  std::vector<std::string> skipped;
  const auto fonts = FontCatalog::load_directory(dejavu, &skipped);
  REQUIRE(fonts.contains("DejaVu Sans"));
  const FontFace* face = fonts.find("DejaVu Sans");
  const auto a = face->glyph_for(U'A');
  REQUIRE(a.has_value());
  CHECK(face->advance(*a) > 0.5);
  CHECK(face->advance(*a) < 0.8);
  CHECK_FALSE(face->outline(*a).contours.empty());
  CHECK(face->metrics().ascent > 0.7);
  auto t = mono("Hamburgefonstiv", 24, 0.05, 0.2, 0.9);
  t.font_family = "DejaVu Sans";
  RasterImage out = blank(240, 80);
  rasterize_layer(layout_text(t, {240, 80}, fonts, true), t, out);
  CHECK(changed(out, blank(240, 80)).size() > 300);
}
