#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "designpipe/clients.hpp"
#include "designpipe/document.hpp"
#include "designpipe/font.hpp"
#include "designpipe/plan.hpp"

namespace designpipe {

// Ordered text elements; order is z-order and reading priority.
struct TypographySpec {
  std::vector<TextLayer> texts;
  friend bool operator==(const TypographySpec&, const TypographySpec&) = default;
};

struct RepairedSpec {
  TypographySpec spec;
  std::vector<std::string> warnings;
};

// Slack allowed on the 10%-inside placement rule; repaired coordinates are
// rounded to 6 decimals and may sit up to half a micro-unit past the bound.
inline constexpr double kPlacementTolerance = 1e-6;
inline constexpr double kMinVisibleFraction = 0.1;
inline constexpr double kMinFontSizePx = 4.0;

std::vector<std::string> flatten_headings(const DesignPlan& plan);

std::string build_typography_request(const DesignPlan& plan, const Canvas& canvas);

// Box height as a canvas fraction: explicit lines x line_height x font size.
double text_box_height(const TextLayer& layer, const Canvas& canvas);

// True when at least 10% of the box's width and height lie inside the canvas.
bool keeps_visible_fraction(const TextLayer& layer, const Canvas& canvas);

RepairedSpec repair_spec(const TypographySpec& spec, const Canvas& canvas, const FontCatalog& fonts);

json typography_to_json(const TypographySpec& spec);
std::string serialize_typography(const TypographySpec& spec);

// Extracts {"texts": [...]} from model output, validates every element and
// applies repair_spec. Errors: kNoJsonFound, kInvalidTypography with the
// offending path (e.g. "texts[0].color") as detail.
RepairedSpec parse_typography(std::string_view raw, const Canvas& canvas, const FontCatalog& fonts);

struct TypographyOptions {
  uint64_t seed = 0;
  int max_retries = 3;
  double temperature = 0.7;
  int max_tokens = 1024;
};

Generated<RepairedSpec> generate_typography(MultimodalClient& client, const DesignPlan& plan,
                                            const RasterImage& image, const Canvas& canvas,
                                            const FontCatalog& fonts,
                                            const TypographyOptions& options);

}  // namespace designpipe
