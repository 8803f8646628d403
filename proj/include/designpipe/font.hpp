#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace designpipe {

using GlyphId = uint32_t;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Closed polygons at unit font size, y pointing up from the baseline.
// Filled with the nonzero winding rule.
struct GlyphOutline {
  std::vector<std::vector<Point>> contours;
};

// Face-level metrics at unit size. descent is positive below the baseline.
struct FaceMetrics {
  double ascent = 0.8;
  double descent = 0.2;
  double line_gap = 0.0;
};

class FontFace {
public:
  virtual ~FontFace() = default;

  virtual const std::string& family() const = 0;
  virtual FaceMetrics metrics() const = 0;
  virtual std::optional<GlyphId> glyph_for(char32_t codepoint) const = 0;
  virtual GlyphId notdef() const { return 0; }
  // Advance at unit size; scaled linearly by the font size.
  virtual double advance(GlyphId glyph) const = 0;
  virtual const GlyphOutline& outline(GlyphId glyph) const = 0;
};

// Face described by a JSON file of unit advances. Every mapped glyph is a
// solid block spanning [0, advance] x [-descent, ascent], except codepoints
// listed as blank. Used for metric oracles and as the built-in font.
//
//   {"family": "Test Mono", "ascent": 0.8, "descent": 0.2, "line_gap": 0,
//    "notdef_advance": 0.5, "ranges": [[32, 126, 0.5]],
//    "advances": {"8364": 0.6}, "blank": [32]}
class SyntheticFont final : public FontFace {
public:
  struct Description {
    std::string family;
    FaceMetrics metrics;
    double notdef_advance = 0.5;
    std::map<char32_t, double> advances;
    std::vector<char32_t> blank;
  };

  explicit SyntheticFont(Description desc);

  static std::shared_ptr<SyntheticFont> from_json(std::string_view text);
  static std::shared_ptr<SyntheticFont> load(const std::filesystem::path& path);

  const std::string& family() const override { return family_; }
  FaceMetrics metrics() const override { return metrics_; }
  std::optional<GlyphId> glyph_for(char32_t codepoint) const override;
  double advance(GlyphId glyph) const override;
  const GlyphOutline& outline(GlyphId glyph) const override;

private:
  std::string family_;
  FaceMetrics metrics_;
  std::map<char32_t, GlyphId> cmap_;
  std::vector<double> advances_;  // index 0 is notdef
  std::vector<GlyphOutline> outlines_;
};

// TrueType (glyf outlines) face. Outlines are decoded and flattened once at
// load time, so a loaded face is immutable and safe to share.
class TrueTypeFont final : public FontFace {
public:
  static std::shared_ptr<TrueTypeFont> load(const std::filesystem::path& path);
  static std::shared_ptr<TrueTypeFont> from_bytes(std::span<const uint8_t> bytes,
                                                  std::string fallback_family);

  const std::string& family() const override { return family_; }
  FaceMetrics metrics() const override { return metrics_; }
  std::optional<GlyphId> glyph_for(char32_t codepoint) const override;
  double advance(GlyphId glyph) const override;
  const GlyphOutline& outline(GlyphId glyph) const override;

private:
  TrueTypeFont() = default;

  std::string family_;
  FaceMetrics metrics_;
  std::map<char32_t, GlyphId> cmap_;
  std::vector<double> advances_;
  std::vector<GlyphOutline> outlines_;
};

class FontCatalog {
public:
  FontCatalog() = default;

  // The first face registered under a family name wins. The first face added
  // becomes the default until set_default_family is called.
  void add(std::shared_ptr<const FontFace> face);
  void set_default_family(const std::string& family);

  bool contains(std::string_view family) const;
  const FontFace* find(std::string_view family) const;
  const FontFace& default_face() const;
  const std::string& default_family() const { return default_family_; }
  std::vector<std::string> families() const;
  bool empty() const { return faces_.empty(); }

  // Loads *.ttf and *.font.json files in lexicographic path order. Files that
  // fail to load are skipped and reported through `skipped`.
  static FontCatalog load_directory(const std::filesystem::path& dir,
                                    std::vector<std::string>* skipped = nullptr);

  // Single block face "Block Sans" covering printable ASCII and Latin-1.
  static FontCatalog builtin();

private:
  std::map<std::string, std::shared_ptr<const FontFace>, std::less<>> faces_;
  std::string default_family_;
};

}  // namespace designpipe
