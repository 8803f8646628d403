#include "designpipe/typography.hpp"

#include <algorithm>
#include <cmath>

#include "designpipe/error.hpp"
#include "designpipe/text_util.hpp"

namespace designpipe {

namespace {

// Clamps into [lo, hi]; values already within tolerance of the range are
// left untouched so repeated repair is a fixed point.
double clamp_placement(double v, double lo, double hi) {
  if (v > hi + kPlacementTolerance) return quantize(hi);
  if (v < lo - kPlacementTolerance) return quantize(lo);
  return v;
}

size_t explicit_lines(const std::string& text) {
  return static_cast<size_t>(std::count(text.begin(), text.end(), '\n')) + 1;
}

}  // namespace

std::vector<std::string> flatten_headings(const DesignPlan& plan) {
  std::vector<std::string> out = plan.headings.heading;
  out.insert(out.end(), plan.headings.subheading.begin(), plan.headings.subheading.end());
  return out;
}

std::string build_typography_request(const DesignPlan& plan, const Canvas& canvas) {
  std::string p =
      "You are a typography designer. The attached image is the background of a graphic design. "
      "Choose typography for the texts listed below so that they read well on top of the image "
      "and sit in its open areas.\n\n";
  p += "Design description: " + normalize_whitespace(plan.description) + "\n";
  p += "Keywords: " + join(plan.keywords, ", ") + "\n";
  p += "Canvas: " + std::to_string(canvas.width_px) + " x " + std::to_string(canvas.height_px) +
       " px\n";
  p += "Texts (JSON list, in order): " + json(flatten_headings(plan)).dump() + "\n\n";
  p +=
      "Reply with one JSON object of the form {\"texts\": [...]} holding one entry per text, in "
      "the same order, each with these fields:\n"
      "  \"text\": the text to print; use \"\\n\" for line breaks\n"
      "  \"font_family\": font family name\n"
      "  \"font_size_px\": font size in canvas pixels\n"
      "  \"color\": text color as \"#RRGGBB\"\n"
      "  \"letter_spacing_px\": extra space between letters in pixels, 0 or more\n"
      "  \"line_height\": line spacing as a multiple of font_size_px\n"
      "  \"text_align\": \"left\", \"center\" or \"right\"\n"
      "  \"capitalize\": true to print the text in upper case\n"
      "  \"left\", \"top\", \"width\": box position and width as fractions of the canvas\n"
      "  \"angle_deg\": rotation in degrees, counterclockwise\n"
      "Answer with the JSON object only.";
  return p;
}

double text_box_height(const TextLayer& layer, const Canvas& canvas) {
  return static_cast<double>(explicit_lines(layer.text)) * layer.line_height * layer.font_size_px /
         canvas.height_px;
}

bool keeps_visible_fraction(const TextLayer& layer, const Canvas& canvas) {
  auto visible = [](double start, double extent) {
    const double inside = std::min(start + extent, 1.0) - std::max(start, 0.0);
    return inside >= kMinVisibleFraction * extent - 2 * kPlacementTolerance;
  };
  return visible(layer.left, layer.width) && visible(layer.top, text_box_height(layer, canvas));
}

RepairedSpec repair_spec(const TypographySpec& spec, const Canvas& canvas,
                         const FontCatalog& fonts) {
  RepairedSpec out;
  out.spec = spec;
  for (size_t i = 0; i < out.spec.texts.size(); ++i) {
    TextLayer& t = out.spec.texts[i];
    const std::string path = "texts[" + std::to_string(i) + "]";
    if (!fonts.contains(t.font_family)) {
      out.warnings.push_back(path + ".font_family: \"" + t.font_family + "\" not in catalog, using \"" +
                             fonts.default_family() + "\"");
      t.font_family = fonts.default_family();
    }
    const double max_size = canvas.height_px;
    if (t.font_size_px < kMinFontSizePx || t.font_size_px > max_size) {
      out.warnings.push_back(path + ".font_size_px clamped");
      t.font_size_px = std::clamp(t.font_size_px, kMinFontSizePx, max_size);
    }
    const double h = text_box_height(t, canvas);
    const double left = clamp_placement(t.left, -(1.0 - kMinVisibleFraction) * t.width,
                                        1.0 - kMinVisibleFraction * t.width);
    const double top =
        clamp_placement(t.top, -(1.0 - kMinVisibleFraction) * h, 1.0 - kMinVisibleFraction * h);
    if (left != t.left) out.warnings.push_back(path + ".left clamped");
    if (top != t.top) out.warnings.push_back(path + ".top clamped");
    t.left = left;
    t.top = top;
  }
  return out;
}

json typography_to_json(const TypographySpec& spec) {
  json texts = json::array();
  for (const auto& t : spec.texts) texts.push_back(text_layer_to_json(t));
  return json{{"texts", std::move(texts)}};
}

std::string serialize_typography(const TypographySpec& spec) {
  return canonical_dump(typography_to_json(spec));
}

RepairedSpec parse_typography(std::string_view raw, const Canvas& canvas,
                              const FontCatalog& fonts) {
  const json root = extract_json_object(raw);
  auto it = root.find("texts");
  if (it == root.end() || !it->is_array()) {
    throw Error(ErrorKind::kInvalidTypography, "texts: expected a list", "texts");
  }
  TypographySpec spec;
  for (size_t i = 0; i < it->size(); ++i) {
    const std::string path = "texts[" + std::to_string(i) + "]";
    json element = (*it)[i];
    if (element.is_object() && !element.contains("font_family")) element["font_family"] = "";
    try {
      spec.texts.push_back(text_layer_from_json(element, path));
    } catch (const Error& e) {
      throw Error(ErrorKind::kInvalidTypography, e.what(), e.detail());
    }
  }
  return repair_spec(spec, canvas, fonts);
}

Generated<RepairedSpec> generate_typography(MultimodalClient& client, const DesignPlan& plan,
                                            const RasterImage& image, const Canvas& canvas,
                                            const FontCatalog& fonts,
                                            const TypographyOptions& options) {
  if (options.max_retries < 1) throw Error(ErrorKind::kInputError, "max_retries must be >= 1");
  const std::string prompt = build_typography_request(plan, canvas);
  std::string last_error = "no attempts";
  for (int attempt = 0; attempt < options.max_retries; ++attempt) {
    const SamplingParams sampling{options.temperature,
                                  options.seed + static_cast<uint64_t>(attempt),
                                  options.max_tokens};
    const std::string raw = client.complete(image, prompt, sampling);
    try {
      return {parse_typography(raw, canvas, fonts), attempt + 1};
    } catch (const Error& e) {
      if (!is_retryable(e.kind())) throw;
      last_error = std::string(to_string(e.kind())) + ": " + e.what();
    }
  }
  throw Error(ErrorKind::kGenerationExhausted,
              "typography generation failed after " + std::to_string(options.max_retries) +
                  " attempts; last error: " + last_error,
              last_error);
}

}  // namespace designpipe
