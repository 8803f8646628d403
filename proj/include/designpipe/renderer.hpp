#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "designpipe/document.hpp"
#include "designpipe/font.hpp"
#include "designpipe/raster.hpp"

namespace designpipe {

struct PositionedGlyph {
  char32_t codepoint = 0;
  const FontFace* face = nullptr;
  GlyphId glyph = 0;
  double x_px = 0.0;  // pen position, canvas space, before rotation
  double advance_px = 0.0;
};

struct LineLayout {
  std::vector<PositionedGlyph> glyphs;
  double origin_x_px = 0.0;
  double line_width_px = 0.0;
  double baseline_y_px = 0.0;
};

// Box geometry in canvas pixels. height_px is derived from the line count.
struct TextBox {
  double left_px = 0.0;
  double top_px = 0.0;
  double width_px = 0.0;
  double height_px = 0.0;
};

struct TextLayout {
  std::vector<LineLayout> lines;
  TextBox box;
  double font_size_px = 0.0;
  double ascent_px = 0.0;
  double descent_px = 0.0;
  // Codepoints found in neither the layer's face nor the catalog default;
  // each was drawn with the face's notdef glyph.
  std::vector<char32_t> missing_glyphs;
};

// Width of a glyph run: sum of advances plus spacing between glyphs.
double line_width(const std::vector<PositionedGlyph>& glyphs, double letter_spacing_px);

TextLayout layout_text(const TextLayer& layer, const Canvas& canvas, const FontCatalog& fonts,
                       bool wrap);

// Fills the laid-out glyphs with layer.color using 4x4 supersampled coverage
// as alpha, rotated angle_deg counterclockwise about the box center, and
// composites them source-over onto `target`. Pixels no glyph touches are left
// unchanged.
void rasterize_layer(const TextLayout& layout, const TextLayer& layer, RasterImage& target);

// Resolves an image layer's source_id; nullopt means missing.
using AssetResolver = std::function<std::optional<RasterImage>(std::string_view source_id)>;

// Looks up `<dir>/<source_id>`, appending ".png" when the id has no extension.
AssetResolver directory_assets(std::filesystem::path dir);

void draw_image_layer(const ImageLayer& layer, const RasterImage& source, RasterImage& target);

RasterImage render_document(const DesignDocument& doc, const AssetResolver& assets,
                            const FontCatalog& fonts, bool wrap);

struct TypographySpec;

RasterImage render_final(const RasterImage& background, const TypographySpec& spec,
                         const Canvas& canvas, const FontCatalog& fonts, bool wrap);

}  // namespace designpipe
