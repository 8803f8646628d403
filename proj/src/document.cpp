#include "designpipe/document.hpp"

#include <cmath>
#include <cstdio>

#include "designpipe/error.hpp"

namespace designpipe {

namespace {

[[noreturn]] void violation(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::kSchemaViolation, path + ": " + what, path);
}

std::string join_path(const std::string& base, std::string_view field) {
  return base.empty() ? std::string(field) : base + "." + std::string(field);
}

const json& require(const json& obj, const std::string& path, std::string_view field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) violation(join_path(path, field), "missing field");
  return *it;
}

double get_number(const json& obj, const std::string& path, std::string_view field) {
  const json& v = require(obj, path, field);
  if (!v.is_number()) violation(join_path(path, field), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) violation(join_path(path, field), "expected a finite number");
  return quantize(d);
}

double get_number_or(const json& obj, const std::string& path, std::string_view field,
                     double fallback) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return fallback;
  return get_number(obj, path, field);
}

std::string get_string(const json& obj, const std::string& path, std::string_view field) {
  const json& v = require(obj, path, field);
  if (!v.is_string()) violation(join_path(path, field), "expected a string");
  return v.get<std::string>();
}

int get_positive_int(const json& obj, const std::string& path, std::string_view field) {
  const json& v = require(obj, path, field);
  if (!v.is_number_integer() || v.get<int64_t>() < 1 || v.get<int64_t>() > 1 << 20) {
    violation(join_path(path, field), "expected a positive integer");
  }
  return v.get<int>();
}

void check_range(double v, double lo, double hi, bool lo_open, const std::string& path) {
  const bool below = lo_open ? v <= lo : v < lo;
  if (below || v > hi) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "value %g outside %c%g, %g]", v, lo_open ? '(' : '[', lo, hi);
    violation(path, buf);
  }
}

ImageLayer image_layer_from_json(const json& j, const std::string& path) {
  ImageLayer layer;
  layer.source_id = get_string(j, path, "source_id");
  if (layer.source_id.empty()) violation(join_path(path, "source_id"), "must be non-empty");
  layer.left = get_number(j, path, "left");
  layer.top = get_number(j, path, "top");
  layer.width = get_number(j, path, "width");
  layer.height = get_number(j, path, "height");
  layer.opacity = get_number_or(j, path, "opacity", 1.0);
  layer.angle_deg = get_number_or(j, path, "angle_deg", 0.0);
  check_range(layer.left, -0.25, 1.0, false, join_path(path, "left"));
  check_range(layer.top, -0.25, 1.0, false, join_path(path, "top"));
  check_range(layer.width, 0.0, 2.0, true, join_path(path, "width"));
  check_range(layer.height, 0.0, 2.0, true, join_path(path, "height"));
  check_range(layer.opacity, 0.0, 1.0, false, join_path(path, "opacity"));
  return layer;
}

json image_layer_to_json(const ImageLayer& layer) {
  return json{{"kind", "image"},
              {"source_id", layer.source_id},
              {"left", quantize(layer.left)},
              {"top", quantize(layer.top)},
              {"width", quantize(layer.width)},
              {"height", quantize(layer.height)},
              {"opacity", quantize(layer.opacity)},
              {"angle_deg", quantize(layer.angle_deg)}};
}

TextAlign parse_align(const json& j, const std::string& path) {
  auto it = j.find("text_align");
  if (it == j.end() || it->is_null()) return TextAlign::kLeft;
  if (!it->is_string()) violation(join_path(path, "text_align"), "expected a string");
  const auto& s = it->get_ref<const std::string&>();
  if (s == "left") return TextAlign::kLeft;
  if (s == "center") return TextAlign::kCenter;
  if (s == "right") return TextAlign::kRight;
  violation(join_path(path, "text_align"), "must be one of left, center, right");
}

}  // namespace

std::string_view to_string(TextAlign align) {
  switch (align) {
    case TextAlign::kLeft: return "left";
    case TextAlign::kCenter: return "center";
    case TextAlign::kRight: return "right";
  }
  return "left";
}

std::string format_color(Rgb color) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02X%02X%02X", color.r, color.g, color.b);
  return buf;
}

bool parse_color(std::string_view text, Rgb& out) {
  if (text.size() != 7 || text[0] != '#') return false;
  uint8_t bytes[3];
  for (int i = 0; i < 3; ++i) {
    int value = 0;
    for (int k = 0; k < 2; ++k) {
      const char c = text[1 + i * 2 + k];
      int digit;
      if (c >= '0' && c <= '9') {
        digit = c - '0';
      } else if (c >= 'a' && c <= 'f') {
        digit = c - 'a' + 10;
      } else if (c >= 'A' && c <= 'F') {
        digit = c - 'A' + 10;
      } else {
        return false;
      }
      value = value * 16 + digit;
    }
    bytes[i] = static_cast<uint8_t>(value);
  }
  out = Rgb{bytes[0], bytes[1], bytes[2]};
  return true;
}

json text_layer_to_json(const TextLayer& layer) {
  return json{{"text", layer.text},
              {"font_family", layer.font_family},
              {"font_size_px", quantize(layer.font_size_px)},
              {"color", format_color(layer.color)},
              {"letter_spacing_px", quantize(layer.letter_spacing_px)},
              {"line_height", quantize(layer.line_height)},
              {"text_align", std::string(to_string(layer.text_align))},
              {"capitalize", layer.capitalize},
              {"left", quantize(layer.left)},
              {"top", quantize(layer.top)},
              {"width", quantize(layer.width)},
              {"angle_deg", quantize(layer.angle_deg)}};
}

TextLayer text_layer_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) violation(path, "expected an object");
  TextLayer layer;
  layer.text = get_string(j, path, "text");
  layer.font_family = get_string(j, path, "font_family");
  layer.font_size_px = get_number(j, path, "font_size_px");
  if (layer.font_size_px <= 0) violation(join_path(path, "font_size_px"), "must be positive");
  const json& color = require(j, path, "color");
  if (!color.is_string() || !parse_color(color.get<std::string>(), layer.color)) {
    violation(join_path(path, "color"), "expected #RRGGBB");
  }
  layer.letter_spacing_px = get_number_or(j, path, "letter_spacing_px", 0.0);
  if (layer.letter_spacing_px < 0) {
    violation(join_path(path, "letter_spacing_px"), "must be non-negative");
  }
  layer.line_height = get_number_or(j, path, "line_height", 1.2);
  if (layer.line_height <= 0) violation(join_path(path, "line_height"), "must be positive");
  layer.text_align = parse_align(j, path);
  if (auto it = j.find("capitalize"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) violation(join_path(path, "capitalize"), "expected a boolean");
    layer.capitalize = it->get<bool>();
  }
  layer.left = get_number(j, path, "left");
  layer.top = get_number(j, path, "top");
  layer.width = get_number(j, path, "width");
  if (layer.width <= 0) violation(join_path(path, "width"), "must be positive");
  layer.angle_deg = get_number_or(j, path, "angle_deg", 0.0);
  return layer;
}

DesignDocument parse_document(std::string_view bytes) {
  json root = json::parse(bytes, nullptr, false);
  if (root.is_discarded()) throw Error(ErrorKind::kMalformedSyntax, "document is not valid JSON");
  if (!root.is_object()) violation("", "document root must be an object");

  DesignDocument doc;
  doc.id = get_string(root, "", "id");
  const json& canvas = require(root, "", "canvas");
  if (!canvas.is_object()) violation("canvas", "expected an object");
  doc.canvas.width_px = get_positive_int(canvas, "canvas", "width_px");
  doc.canvas.height_px = get_positive_int(canvas, "canvas", "height_px");

  if (auto it = root.find("metadata"); it != root.end() && !it->is_null()) {
    if (!it->is_object()) violation("metadata", "expected an object");
    const json& meta = *it;
    if (meta.contains("title")) doc.metadata.title = get_string(meta, "metadata", "title");
    if (meta.contains("format")) doc.metadata.format = get_string(meta, "metadata", "format");
    if (auto kw = meta.find("keywords"); kw != meta.end() && !kw->is_null()) {
      if (!kw->is_array()) violation("metadata.keywords", "expected a list");
      for (size_t i = 0; i < kw->size(); ++i) {
        if (!(*kw)[i].is_string()) {
          violation("metadata.keywords[" + std::to_string(i) + "]", "expected a string");
        }
        doc.metadata.keywords.push_back((*kw)[i].get<std::string>());
      }
    }
  }

  const json& layers = require(root, "", "layers");
  if (!layers.is_array()) violation("layers", "expected a list");
  for (size_t i = 0; i < layers.size(); ++i) {
    const std::string path = "layers[" + std::to_string(i) + "]";
    const json& item = layers[i];
    if (!item.is_object()) violation(path, "expected an object");
    const std::string kind = get_string(item, path, "kind");
    if (kind == "image") {
      doc.layers.emplace_back(image_layer_from_json(item, path));
    } else if (kind == "text") {
      TextLayer layer = text_layer_from_json(item, path);
      check_range(layer.left, -0.25, 1.0, false, join_path(path, "left"));
      check_range(layer.top, -0.25, 1.0, false, join_path(path, "top"));
      check_range(layer.width, 0.0, 2.0, true, join_path(path, "width"));
      // The box must reach into the canvas; its first line is the least it covers.
      const double first_line = layer.font_size_px * layer.line_height / doc.canvas.height_px;
      if (layer.left >= 1.0 || layer.left + layer.width <= 0.0 || layer.top >= 1.0 ||
          layer.top + first_line <= 0.0) {
        violation(path, "text box does not intersect the canvas");
      }
      doc.layers.emplace_back(std::move(layer));
    } else {
      violation(join_path(path, "kind"), "must be \"image\" or \"text\"");
    }
  }
  return doc;
}

std::string serialize_document(const DesignDocument& doc) {
  json layers = json::array();
  for (const auto& layer : doc.layers) {
    if (const auto* image = std::get_if<ImageLayer>(&layer)) {
      layers.push_back(image_layer_to_json(*image));
    } else {
      json j = text_layer_to_json(std::get<TextLayer>(layer));
      j["kind"] = "text";
      layers.push_back(std::move(j));
    }
  }
  const json root{{"id", doc.id},
                  {"canvas", {{"width_px", doc.canvas.width_px}, {"height_px", doc.canvas.height_px}}},
                  {"metadata",
                   {{"title", doc.metadata.title},
                    {"format", doc.metadata.format},
                    {"keywords", doc.metadata.keywords}}},
                  {"layers", std::move(layers)}};
  return canonical_dump(root);
}

DesignDocument strip_text_layers(const DesignDocument& doc) {
  DesignDocument out;
  out.id = doc.id;
  out.canvas = doc.canvas;
  out.metadata = doc.metadata;
  for (const auto& layer : doc.layers) {
    if (std::holds_alternative<ImageLayer>(layer)) out.layers.push_back(layer);
  }
  return out;
}

std::vector<std::string> document_texts(const DesignDocument& doc) {
  std::vector<std::string> texts;
  for (const auto& layer : doc.layers) {
    if (const auto* text = std::get_if<TextLayer>(&layer)) texts.push_back(text->text);
  }
  return texts;
}

}  // namespace designpipe
