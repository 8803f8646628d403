#include "designpipe/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>

#include "designpipe/error.hpp"
#include "designpipe/text_util.hpp"
#include "designpipe/typography.hpp"

namespace designpipe {

namespace {

constexpr int kSubsamples = 4;

// Rotation about a center point; visually counterclockwise on a y-down canvas.
struct Rotation {
  double cx = 0.0;
  double cy = 0.0;
  double cos_a = 1.0;
  double sin_a = 0.0;
  bool identity = true;

  Rotation(double center_x, double center_y, double angle_deg) : cx(center_x), cy(center_y) {
    double a = std::fmod(angle_deg, 360.0);
    if (a < 0) a += 360.0;
    if (a == 0.0) return;
    identity = false;
    if (a == 90.0) {
      cos_a = 0.0;
      sin_a = 1.0;
    } else if (a == 180.0) {
      cos_a = -1.0;
      sin_a = 0.0;
    } else if (a == 270.0) {
      cos_a = 0.0;
      sin_a = -1.0;
    } else {
      const double rad = a * std::numbers::pi / 180.0;
      cos_a = std::cos(rad);
      sin_a = std::sin(rad);
    }
  }

  Point forward(double x, double y) const {
    if (identity) return {x, y};
    const double dx = x - cx;
    const double dy = y - cy;
    return {cx + dx * cos_a + dy * sin_a, cy - dx * sin_a + dy * cos_a};
  }

  Point inverse(double x, double y) const {
    if (identity) return {x, y};
    const double dx = x - cx;
    const double dy = y - cy;
    return {cx + dx * cos_a - dy * sin_a, cy + dx * sin_a + dy * cos_a};
  }
};

struct Edge {
  double x0, y0, x1, y1;
  int dir;
};

PositionedGlyph map_glyph(char32_t cp, const FontFace& face, const FontFace& fallback,
                          double size, std::vector<char32_t>& missing) {
  PositionedGlyph g;
  g.codepoint = cp;
  if (auto id = face.glyph_for(cp)) {
    g.face = &face;
    g.glyph = *id;
  } else if (auto fid = fallback.glyph_for(cp)) {
    g.face = &fallback;
    g.glyph = *fid;
  } else {
    g.face = &face;
    g.glyph = face.notdef();
    missing.push_back(cp);
  }
  g.advance_px = g.face->advance(g.glyph) * size;
  return g;
}

std::vector<PositionedGlyph> shape(std::u32string_view text, const FontFace& face,
                                   const FontFace& fallback, double size,
                                   std::vector<char32_t>& missing) {
  std::vector<PositionedGlyph> run;
  run.reserve(text.size());
  for (char32_t cp : text) run.push_back(map_glyph(cp, face, fallback, size, missing));
  return run;
}

std::vector<std::u32string> split_lines(std::u32string_view text) {
  std::vector<std::u32string> lines;
  size_t start = 0;
  for (size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == U'\n') {
      std::u32string line(text.substr(start, i - start));
      if (!line.empty() && line.back() == U'\r') line.pop_back();
      lines.push_back(std::move(line));
      start = i + 1;
    }
  }
  return lines;
}

std::vector<std::u32string> split_words(std::u32string_view line) {
  std::vector<std::u32string> words;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == U' ') ++i;
    const size_t start = i;
    while (i < line.size() && line[i] != U' ') ++i;
    if (i > start) words.emplace_back(line.substr(start, i - start));
  }
  return words;
}

// Greedy word wrap. A word wider than the box stays alone on its own line.
std::vector<std::u32string> wrap_line(const std::u32string& line, double max_width,
                                      const FontFace& face, const FontFace& fallback,
                                      double size, double spacing) {
  std::vector<char32_t> scratch;
  auto measure = [&](std::u32string_view s) {
    return line_width(shape(s, face, fallback, size, scratch), spacing);
  };
  if (measure(line) <= max_width + 1e-9) return {line};
  const auto words = split_words(line);
  if (words.empty()) return {line};
  std::vector<std::u32string> out;
  std::u32string current = words[0];
  for (size_t i = 1; i < words.size(); ++i) {
    std::u32string candidate = current + U" " + words[i];
    if (measure(candidate) <= max_width + 1e-9) {
      current = std::move(candidate);
    } else {
      out.push_back(std::move(current));
      current = words[i];
    }
  }
  out.push_back(std::move(current));
  return out;
}

void fill_edges(std::vector<Edge>& edges, RasterImage& target, const Rgb& color) {
  if (edges.empty()) return;
  double min_x = edges[0].x0, max_x = edges[0].x0, min_y = edges[0].y0, max_y = edges[0].y0;
  for (const auto& e : edges) {
    min_x = std::min({min_x, e.x0, e.x1});
    max_x = std::max({max_x, e.x0, e.x1});
    min_y = std::min({min_y, e.y0, e.y1});
    max_y = std::max({max_y, e.y0, e.y1});
  }
  const int px0 = std::max(0, static_cast<int>(std::floor(min_x)));
  const int px1 = std::min(target.width() - 1, static_cast<int>(std::floor(max_x)));
  const int py0 = std::max(0, static_cast<int>(std::floor(min_y)));
  const int py1 = std::min(target.height() - 1, static_cast<int>(std::floor(max_y)));
  if (px0 > px1 || py0 > py1) return;

  // Edges sorted by their top; an active list tracks those spanning the sub-row.
  for (auto& e : edges) {
    if (e.y0 > e.y1) {
      std::swap(e.x0, e.x1);
      std::swap(e.y0, e.y1);
      e.dir = -e.dir;
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.y0 < b.y0; });

  const int span = px1 - px0 + 1;
  std::vector<int> coverage(span);
  std::vector<const Edge*> active;
  std::vector<std::pair<double, int>> crossings;
  size_t next_edge = 0;
  const uint8_t rgb[3] = {color.r, color.g, color.b};

  for (int py = py0; py <= py1; ++py) {
    std::fill(coverage.begin(), coverage.end(), 0);
    bool any = false;
    for (int sub = 0; sub < kSubsamples; ++sub) {
      const double sy = py + (sub + 0.5) / kSubsamples;
      while (next_edge < edges.size() && edges[next_edge].y0 <= sy) {
        active.push_back(&edges[next_edge++]);
      }
      std::erase_if(active, [sy](const Edge* e) { return e->y1 <= sy; });
      crossings.clear();
      for (const Edge* e : active) {
        if (sy < e->y0 || sy >= e->y1) continue;
        const double t = (sy - e->y0) / (e->y1 - e->y0);
        crossings.emplace_back(e->x0 + t * (e->x1 - e->x0), e->dir);
      }
      if (crossings.empty()) continue;
      std::sort(crossings.begin(), crossings.end());
      int winding = 0;
      for (size_t i = 0; i + 1 < crossings.size(); ++i) {
        winding += crossings[i].second;
        if (winding == 0) continue;
        // Sample k sits at x = (k + 0.5) / kSubsamples.
        const double xa = crossings[i].first;
        const double xb = crossings[i + 1].first;
        long k0 = std::lround(std::ceil(xa * kSubsamples - 0.5));
        long k1 = std::lround(std::ceil(xb * kSubsamples - 0.5));
        k0 = std::max<long>(k0, static_cast<long>(px0) * kSubsamples);
        k1 = std::min<long>(k1, static_cast<long>(px1 + 1) * kSubsamples);
        for (long k = k0; k < k1; ++k) {
          ++coverage[k / kSubsamples - px0];
          any = true;
        }
      }
    }
    if (!any) continue;
    constexpr int kFull = kSubsamples * kSubsamples;
    for (int i = 0; i < span; ++i) {
      if (coverage[i] == 0) continue;
      const auto alpha = static_cast<uint8_t>((coverage[i] * 255 + kFull / 2) / kFull);
      blend_over(target.at(px0 + i, py), rgb, alpha);
    }
  }
}

}  // namespace

double line_width(const std::vector<PositionedGlyph>& glyphs, double letter_spacing_px) {
  if (glyphs.empty()) return 0.0;
  double w = 0.0;
  for (const auto& g : glyphs) w += g.advance_px;
  return w + letter_spacing_px * static_cast<double>(glyphs.size() - 1);
}

TextLayout layout_text(const TextLayer& layer, const Canvas& canvas, const FontCatalog& fonts,
                       bool wrap) {
  const FontFace& fallback = fonts.default_face();
  const FontFace* found = fonts.find(layer.font_family);
  const FontFace& face = found != nullptr ? *found : fallback;
  const double size = layer.font_size_px;
  const double spacing = layer.letter_spacing_px;
  const FaceMetrics m = face.metrics();

  TextLayout out;
  out.font_size_px = size;
  out.ascent_px = m.ascent * size;
  out.descent_px = m.descent * size;
  out.box.left_px = layer.left * canvas.width_px;
  out.box.top_px = layer.top * canvas.height_px;
  out.box.width_px = layer.width * canvas.width_px;
  if (layer.text.empty()) return out;

  std::u32string text = utf8_decode(layer.text);
  if (layer.capitalize) text = to_upper(text);

  std::vector<std::u32string> lines;
  for (auto& line : split_lines(text)) {
    if (wrap) {
      for (auto& piece : wrap_line(line, out.box.width_px, face, fallback, size, spacing)) {
        lines.push_back(std::move(piece));
      }
    } else {
      lines.push_back(std::move(line));
    }
  }

  const double advance_y = layer.line_height * size;
  for (size_t i = 0; i < lines.size(); ++i) {
    LineLayout line;
    line.glyphs = shape(lines[i], face, fallback, size, out.missing_glyphs);
    line.line_width_px = line_width(line.glyphs, spacing);
    line.baseline_y_px = out.box.top_px + out.ascent_px + static_cast<double>(i) * advance_y;
    switch (layer.text_align) {
      case TextAlign::kLeft: line.origin_x_px = out.box.left_px; break;
      case TextAlign::kCenter:
        line.origin_x_px = out.box.left_px + (out.box.width_px - line.line_width_px) / 2.0;
        break;
      case TextAlign::kRight:
        line.origin_x_px = out.box.left_px + out.box.width_px - line.line_width_px;
        break;
    }
    double pen = line.origin_x_px;
    for (auto& g : line.glyphs) {
      g.x_px = pen;
      pen += g.advance_px + spacing;
    }
    out.lines.push_back(std::move(line));
  }
  out.box.height_px = static_cast<double>(out.lines.size()) * advance_y;
  return out;
}

void rasterize_layer(const TextLayout& layout, const TextLayer& layer, RasterImage& target) {
  if (layout.lines.empty()) return;
  const Rotation rot(layout.box.left_px + layout.box.width_px / 2.0,
                     layout.box.top_px + layout.box.height_px / 2.0, layer.angle_deg);
  const double size = layout.font_size_px;
  std::vector<Edge> edges;
  for (const auto& line : layout.lines) {
    for (const auto& g : line.glyphs) {
      for (const auto& contour : g.face->outline(g.glyph).contours) {
        const size_t n = contour.size();
        for (size_t i = 0; i < n; ++i) {
          const Point& a = contour[i];
          const Point& b = contour[(i + 1) % n];
          const Point pa = rot.forward(g.x_px + a.x * size, line.baseline_y_px - a.y * size);
          const Point pb = rot.forward(g.x_px + b.x * size, line.baseline_y_px - b.y * size);
          if (pa.y == pb.y) continue;
          edges.push_back({pa.x, pa.y, pb.x, pb.y, 1});
        }
      }
    }
  }
  fill_edges(edges, target, layer.color);
}

AssetResolver directory_assets(std::filesystem::path dir) {
  return [dir = std::move(dir)](std::string_view source_id) -> std::optional<RasterImage> {
    std::filesystem::path path = dir / std::string(source_id);
    if (!path.has_extension()) path += ".png";
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_png(bytes);
  };
}

void draw_image_layer(const ImageLayer& layer, const RasterImage& source, RasterImage& target) {
  const double bl = layer.left * target.width();
  const double bt = layer.top * target.height();
  const double bw = layer.width * target.width();
  const double bh = layer.height * target.height();
  const Rotation rot(bl + bw / 2.0, bt + bh / 2.0, layer.angle_deg);

  // Bounding box of the rotated layer, clipped to the target.
  double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
  for (const auto& [cx, cy] : {std::pair{bl, bt}, {bl + bw, bt}, {bl, bt + bh}, {bl + bw, bt + bh}}) {
    const Point p = rot.forward(cx, cy);
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(min_x)));
  const int x1 = std::min(target.width() - 1, static_cast<int>(std::ceil(max_x)));
  const int y0 = std::max(0, static_cast<int>(std::floor(min_y)));
  const int y1 = std::min(target.height() - 1, static_cast<int>(std::ceil(max_y)));

  uint8_t px[4];
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const Point local = rot.inverse(x + 0.5, y + 0.5);
      if (local.x < bl || local.x >= bl + bw || local.y < bt || local.y >= bt + bh) continue;
      // Same expression order as resize_bilinear so an unrotated full-canvas
      // layer reproduces it exactly.
      const double u = (local.x - bl) * source.width() / bw - 0.5;
      const double v = (local.y - bt) * source.height() / bh - 0.5;
      sample_bilinear(source, u, v, px);
      const auto alpha =
          static_cast<uint8_t>(std::clamp(std::lround(px[3] * layer.opacity), 0L, 255L));
      blend_over(target.at(x, y), px, alpha);
    }
  }
}

RasterImage render_document(const DesignDocument& doc, const AssetResolver& assets,
                            const FontCatalog& fonts, bool wrap) {
  RasterImage out(doc.canvas.width_px, doc.canvas.height_px, {255, 255, 255, 255});
  for (const auto& layer : doc.layers) {
    if (const auto* image = std::get_if<ImageLayer>(&layer)) {
      std::optional<RasterImage> source = assets ? assets(image->source_id) : std::nullopt;
      if (!source) {
        throw Error(ErrorKind::kMissingAsset, "missing asset: " + image->source_id,
                    image->source_id);
      }
      draw_image_layer(*image, *source, out);
    } else {
      const auto& text = std::get<TextLayer>(layer);
      rasterize_layer(layout_text(text, doc.canvas, fonts, wrap), text, out);
    }
  }
  return out;
}

RasterImage render_final(const RasterImage& background, const TypographySpec& spec,
                         const Canvas& canvas, const FontCatalog& fonts, bool wrap) {
  RasterImage out = fit_to_canvas(background, canvas.width_px, canvas.height_px);
  for (const auto& text : spec.texts) {
    rasterize_layer(layout_text(text, canvas, fonts, wrap), text, out);
  }
  return out;
}

}  // namespace designpipe
