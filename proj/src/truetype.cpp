// Minimal TrueType reader: cmap (formats 4 and 12), hmtx, name and glyf
// outlines including composite glyphs. No hinting; CFF-flavored OpenType is
// rejected.

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>

#include "designpipe/error.hpp"
#include "designpipe/font.hpp"

namespace designpipe {

namespace {

constexpr int kCurveSegments = 8;

class Reader {
public:
  explicit Reader(std::span<const uint8_t> data) : data_(data) {}

  size_t size() const { return data_.size(); }

  uint8_t u8(size_t off) const {
    check(off, 1);
    return data_[off];
  }
  uint16_t u16(size_t off) const {
    check(off, 2);
    return static_cast<uint16_t>(data_[off] << 8 | data_[off + 1]);
  }
  int16_t i16(size_t off) const { return static_cast<int16_t>(u16(off)); }
  uint32_t u32(size_t off) const {
    check(off, 4);
    return static_cast<uint32_t>(data_[off]) << 24 | static_cast<uint32_t>(data_[off + 1]) << 16 |
           static_cast<uint32_t>(data_[off + 2]) << 8 | data_[off + 3];
  }

private:
  void check(size_t off, size_t len) const {
    if (off + len > data_.size()) throw Error(ErrorKind::kMalformedSyntax, "truncated font file");
  }

  std::span<const uint8_t> data_;
};

struct TableDirectory {
  std::map<std::string, std::pair<uint32_t, uint32_t>> tables;  // tag -> (offset, length)

  uint32_t offset(const std::string& tag) const {
    auto it = tables.find(tag);
    if (it == tables.end()) throw Error(ErrorKind::kMalformedSyntax, "missing table " + tag);
    return it->second.first;
  }
  bool has(const std::string& tag) const { return tables.contains(tag); }
};

struct RawPoint {
  double x;
  double y;
  bool on_curve;
};

struct Affine {
  double a = 1, b = 0, c = 0, d = 1, dx = 0, dy = 0;

  RawPoint apply(RawPoint p) const {
    return {a * p.x + c * p.y + dx, b * p.x + d * p.y + dy, p.on_curve};
  }
};

class GlyfDecoder {
public:
  GlyfDecoder(const Reader& r, uint32_t glyf, std::vector<uint32_t> loca)
      : r_(r), glyf_(glyf), loca_(std::move(loca)) {}

  // Appends the glyph's contours (font units) to `out`.
  void decode(GlyphId glyph, const Affine& xf, std::vector<std::vector<RawPoint>>& out,
              int depth = 0) const {
    if (depth > 8 || glyph + 1 >= loca_.size()) return;
    const uint32_t start = loca_[glyph];
    const uint32_t end = loca_[glyph + 1];
    if (end <= start) return;  // empty glyph, e.g. space
    const size_t base = glyf_ + start;
    const int16_t contours = r_.i16(base);
    if (contours >= 0) {
      decode_simple(base, contours, xf, out);
    } else {
      decode_composite(base, xf, out, depth);
    }
  }

private:
  void decode_simple(size_t base, int contours, const Affine& xf,
                     std::vector<std::vector<RawPoint>>& out) const {
    size_t p = base + 10;
    std::vector<uint16_t> end_pts(contours);
    for (int i = 0; i < contours; ++i, p += 2) end_pts[i] = r_.u16(p);
    const size_t n_points = contours == 0 ? 0 : end_pts.back() + 1u;
    const uint16_t instr_len = r_.u16(p);
    p += 2 + instr_len;

    std::vector<uint8_t> flags;
    flags.reserve(n_points);
    while (flags.size() < n_points) {
      const uint8_t f = r_.u8(p++);
      flags.push_back(f);
      if (f & 0x08) {
        uint8_t repeat = r_.u8(p++);
        while (repeat-- > 0 && flags.size() < n_points) flags.push_back(f);
      }
    }
    std::vector<RawPoint> pts(n_points);
    int value = 0;
    for (size_t i = 0; i < n_points; ++i) {
      const uint8_t f = flags[i];
      if (f & 0x02) {
        const int dv = r_.u8(p++);
        value += (f & 0x10) ? dv : -dv;
      } else if (!(f & 0x10)) {
        value += r_.i16(p);
        p += 2;
      }
      pts[i].x = value;
      pts[i].on_curve = (f & 0x01) != 0;
    }
    value = 0;
    for (size_t i = 0; i < n_points; ++i) {
      const uint8_t f = flags[i];
      if (f & 0x04) {
        const int dv = r_.u8(p++);
        value += (f & 0x20) ? dv : -dv;
      } else if (!(f & 0x20)) {
        value += r_.i16(p);
        p += 2;
      }
      pts[i].y = value;
    }
    size_t first = 0;
    for (int c = 0; c < contours; ++c) {
      std::vector<RawPoint> contour;
      for (size_t i = first; i <= end_pts[c] && i < n_points; ++i) contour.push_back(xf.apply(pts[i]));
      if (!contour.empty()) out.push_back(std::move(contour));
      first = end_pts[c] + 1u;
    }
  }

  void decode_composite(size_t base, const Affine& xf, std::vector<std::vector<RawPoint>>& out,
                        int depth) const {
    size_t p = base + 10;
    for (;;) {
      const uint16_t flags = r_.u16(p);
      const uint16_t component = r_.u16(p + 2);
      p += 4;
      double arg1;
      double arg2;
      if (flags & 0x0001) {
        arg1 = r_.i16(p);
        arg2 = r_.i16(p + 2);
        p += 4;
      } else {
        arg1 = static_cast<int8_t>(r_.u8(p));
        arg2 = static_cast<int8_t>(r_.u8(p + 1));
        p += 2;
      }
      Affine local;
      auto f2dot14 = [&](size_t off) { return r_.i16(off) / 16384.0; };
      if (flags & 0x0008) {
        local.a = local.d = f2dot14(p);
        p += 2;
      } else if (flags & 0x0040) {
        local.a = f2dot14(p);
        local.d = f2dot14(p + 2);
        p += 4;
      } else if (flags & 0x0080) {
        local.a = f2dot14(p);
        local.b = f2dot14(p + 2);
        local.c = f2dot14(p + 4);
        local.d = f2dot14(p + 6);
        p += 8;
      }
      // Point-matching placement (args are point indices) is rare; treat as no offset.
      if (flags & 0x0002) {
        local.dx = arg1;
        local.dy = arg2;
      }
      Affine combined;
      combined.a = xf.a * local.a + xf.c * local.b;
      combined.b = xf.b * local.a + xf.d * local.b;
      combined.c = xf.a * local.c + xf.c * local.d;
      combined.d = xf.b * local.c + xf.d * local.d;
      combined.dx = xf.a * local.dx + xf.c * local.dy + xf.dx;
      combined.dy = xf.b * local.dx + xf.d * local.dy + xf.dy;
      decode(component, combined, out, depth + 1);
      if (!(flags & 0x0020)) break;
    }
  }

  const Reader& r_;
  uint32_t glyf_;
  std::vector<uint32_t> loca_;
};

// Converts on/off-curve points into a flattened polygon.
std::vector<Point> flatten(const std::vector<RawPoint>& pts, double scale) {
  std::vector<Point> poly;
  const size_t n = pts.size();
  if (n == 0) return poly;
  size_t start = 0;
  RawPoint first;
  if (pts[0].on_curve) {
    first = pts[0];
    start = 1;
  } else if (pts[n - 1].on_curve) {
    first = pts[n - 1];
    start = 0;
  } else {
    first = {(pts[0].x + pts[n - 1].x) / 2, (pts[0].y + pts[n - 1].y) / 2, true};
    start = 0;
  }
  poly.push_back({first.x * scale, first.y * scale});
  RawPoint current = first;
  std::optional<RawPoint> control;
  auto emit_quad = [&](const RawPoint& ctrl, const RawPoint& to) {
    for (int s = 1; s <= kCurveSegments; ++s) {
      const double t = static_cast<double>(s) / kCurveSegments;
      const double mt = 1.0 - t;
      const double x = mt * mt * current.x + 2 * mt * t * ctrl.x + t * t * to.x;
      const double y = mt * mt * current.y + 2 * mt * t * ctrl.y + t * t * to.y;
      poly.push_back({x * scale, y * scale});
    }
    current = to;
  };
  for (size_t k = 0; k < n; ++k) {
    const RawPoint& p = pts[(start + k) % n];
    if (p.on_curve) {
      if (control) {
        emit_quad(*control, p);
        control.reset();
      } else {
        poly.push_back({p.x * scale, p.y * scale});
        current = p;
      }
    } else {
      if (control) {
        const RawPoint mid{(control->x + p.x) / 2, (control->y + p.y) / 2, true};
        emit_quad(*control, mid);
      }
      control = p;
    }
  }
  if (control) emit_quad(*control, first);
  return poly;
}

std::string decode_name(const Reader& r, uint32_t name_off, uint16_t want_id) {
  const uint16_t count = r.u16(name_off + 2);
  const uint16_t storage = r.u16(name_off + 4);
  std::string mac_fallback;
  for (uint16_t i = 0; i < count; ++i) {
    const size_t rec = name_off + 6 + i * 12u;
    const uint16_t platform = r.u16(rec);
    const uint16_t name_id = r.u16(rec + 6);
    const uint16_t length = r.u16(rec + 8);
    const uint16_t offset = r.u16(rec + 10);
    if (name_id != want_id) continue;
    const size_t str = name_off + storage + offset;
    if (platform == 3 || platform == 0) {
      std::string out;
      for (size_t k = 0; k + 1 < length; k += 2) {
        const uint16_t unit = r.u16(str + k);
        if (unit < 0x80) out.push_back(static_cast<char>(unit));
      }
      if (!out.empty()) return out;
    } else if (platform == 1 && mac_fallback.empty()) {
      for (size_t k = 0; k < length; ++k) {
        const uint8_t c = r.u8(str + k);
        if (c < 0x80) mac_fallback.push_back(static_cast<char>(c));
      }
    }
  }
  return mac_fallback;
}

void read_cmap(const Reader& r, uint32_t cmap_off, uint16_t num_glyphs,
               std::map<char32_t, GlyphId>& cmap) {
  const uint16_t n_tables = r.u16(cmap_off + 2);
  int best_rank = -1;
  uint32_t best = 0;
  for (uint16_t i = 0; i < n_tables; ++i) {
    const size_t rec = cmap_off + 4 + i * 8u;
    const uint16_t platform = r.u16(rec);
    const uint16_t encoding = r.u16(rec + 2);
    const uint32_t sub = cmap_off + r.u32(rec + 4);
    const uint16_t format = r.u16(sub);
    int rank = -1;
    if (format == 12 && (platform == 3 || platform == 0)) {
      rank = 3;
    } else if (format == 4 && platform == 3 && encoding == 1) {
      rank = 2;
    } else if (format == 4 && platform == 0) {
      rank = 1;
    }
    if (rank > best_rank) {
      best_rank = rank;
      best = sub;
    }
  }
  if (best_rank < 0) throw Error(ErrorKind::kMalformedSyntax, "no supported cmap subtable");

  auto put = [&](uint32_t cp, uint32_t glyph) {
    if (glyph != 0 && glyph < num_glyphs) cmap.emplace(static_cast<char32_t>(cp), glyph);
  };
  if (r.u16(best) == 12) {
    const uint32_t groups = r.u32(best + 12);
    for (uint32_t g = 0; g < groups; ++g) {
      const size_t rec = best + 16 + g * 12u;
      const uint32_t first = r.u32(rec);
      const uint32_t last = r.u32(rec + 4);
      const uint32_t glyph = r.u32(rec + 8);
      if (last < first || last - first > 0x10FFFF) continue;
      for (uint32_t cp = first; cp <= last; ++cp) put(cp, glyph + (cp - first));
    }
    return;
  }
  const uint16_t seg_count = r.u16(best + 6) / 2;
  const size_t ends = best + 14;
  const size_t starts = ends + seg_count * 2u + 2;
  const size_t deltas = starts + seg_count * 2u;
  const size_t range_offsets = deltas + seg_count * 2u;
  for (uint16_t s = 0; s < seg_count; ++s) {
    const uint16_t end = r.u16(ends + s * 2u);
    const uint16_t start = r.u16(starts + s * 2u);
    const uint16_t delta = r.u16(deltas + s * 2u);
    const uint16_t range_offset = r.u16(range_offsets + s * 2u);
    if (start > end) continue;
    for (uint32_t cp = start; cp <= end && cp != 0xFFFF; ++cp) {
      uint32_t glyph;
      if (range_offset == 0) {
        glyph = (cp + delta) & 0xFFFF;
      } else {
        const size_t addr = range_offsets + s * 2u + range_offset + (cp - start) * 2u;
        glyph = r.u16(addr);
        if (glyph != 0) glyph = (glyph + delta) & 0xFFFF;
      }
      put(cp, glyph);
    }
  }
}

}  // namespace

std::shared_ptr<TrueTypeFont> TrueTypeFont::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInputError, "cannot open font " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_bytes(bytes, path.stem().string());
}

std::shared_ptr<TrueTypeFont> TrueTypeFont::from_bytes(std::span<const uint8_t> bytes,
                                                       std::string fallback_family) {
  const Reader r(bytes);
  const uint32_t version = r.u32(0);
  if (version != 0x00010000 && version != 0x74727565) {
    throw Error(ErrorKind::kMalformedSyntax, "not a TrueType-outline font");
  }
  TableDirectory dir;
  const uint16_t n_tables = r.u16(4);
  for (uint16_t i = 0; i < n_tables; ++i) {
    const size_t rec = 12 + i * 16u;
    std::string tag(4, ' ');
    for (int k = 0; k < 4; ++k) tag[k] = static_cast<char>(r.u8(rec + k));
    dir.tables[tag] = {r.u32(rec + 8), r.u32(rec + 12)};
  }

  auto font = std::shared_ptr<TrueTypeFont>(new TrueTypeFont());
  const uint32_t head = dir.offset("head");
  const double units_per_em = r.u16(head + 18);
  if (units_per_em <= 0) throw Error(ErrorKind::kMalformedSyntax, "invalid unitsPerEm");
  const int16_t loca_format = r.i16(head + 50);
  const uint16_t num_glyphs = r.u16(dir.offset("maxp") + 4);
  const uint32_t hhea = dir.offset("hhea");
  font->metrics_.ascent = r.i16(hhea + 4) / units_per_em;
  font->metrics_.descent = -r.i16(hhea + 6) / units_per_em;
  font->metrics_.line_gap = r.i16(hhea + 8) / units_per_em;
  if (font->metrics_.ascent <= 0) throw Error(ErrorKind::kMalformedSyntax, "invalid ascent");
  const uint16_t n_hmetrics = r.u16(hhea + 34);
  if (n_hmetrics == 0) throw Error(ErrorKind::kMalformedSyntax, "font has no horizontal metrics");

  const uint32_t hmtx = dir.offset("hmtx");
  font->advances_.resize(num_glyphs);
  for (uint16_t g = 0; g < num_glyphs; ++g) {
    const uint16_t idx = std::min<uint16_t>(g, n_hmetrics - 1);
    font->advances_[g] = r.u16(hmtx + idx * 4u) / units_per_em;
  }

  read_cmap(r, dir.offset("cmap"), num_glyphs, font->cmap_);

  std::vector<uint32_t> loca(num_glyphs + 1u);
  const uint32_t loca_off = dir.offset("loca");
  for (uint32_t g = 0; g <= num_glyphs; ++g) {
    loca[g] = loca_format == 0 ? r.u16(loca_off + g * 2) * 2u : r.u32(loca_off + g * 4);
  }
  const GlyfDecoder decoder(r, dir.offset("glyf"), std::move(loca));
  font->outlines_.resize(num_glyphs);
  const double scale = 1.0 / units_per_em;
  for (uint16_t g = 0; g < num_glyphs; ++g) {
    std::vector<std::vector<RawPoint>> raw;
    decoder.decode(g, Affine{}, raw);
    for (const auto& contour : raw) {
      auto poly = flatten(contour, scale);
      if (poly.size() >= 3) font->outlines_[g].contours.push_back(std::move(poly));
    }
  }

  font->family_ = dir.has("name") ? decode_name(r, dir.offset("name"), 4) : std::string();
  if (font->family_.empty() && dir.has("name")) font->family_ = decode_name(r, dir.offset("name"), 1);
  if (font->family_.empty()) font->family_ = std::move(fallback_family);
  return font;
}

std::optional<GlyphId> TrueTypeFont::glyph_for(char32_t codepoint) const {
  auto it = cmap_.find(codepoint);
  if (it == cmap_.end()) return std::nullopt;
  return it->second;
}

double TrueTypeFont::advance(GlyphId glyph) const {
  return glyph < advances_.size() ? advances_[glyph] : 0.0;
}

const GlyphOutline& TrueTypeFont::outline(GlyphId glyph) const {
  static const GlyphOutline kEmpty;
  return glyph < outlines_.size() ? outlines_[glyph] : kEmpty;
}

}  // namespace designpipe
