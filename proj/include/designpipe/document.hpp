#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "designpipe/json_util.hpp"
#include "designpipe/raster.hpp"

namespace designpipe {

struct Canvas {
  int width_px = 1;
  int height_px = 1;

  friend bool operator==(const Canvas&, const Canvas&) = default;
};

struct ImageLayer {
  std::string source_id;
  double left = 0.0;
  double top = 0.0;
  double width = 1.0;
  double height = 1.0;
  double opacity = 1.0;
  double angle_deg = 0.0;

  friend bool operator==(const ImageLayer&, const ImageLayer&) = default;
};

enum class TextAlign { kLeft, kCenter, kRight };

std::string_view to_string(TextAlign align);

// Placement fractions are relative to the canvas. The box height is derived
// from the laid-out line count, so only left/top/width are stored.
struct TextLayer {
  std::string text;
  std::string font_family;
  double font_size_px = 16.0;
  Rgb color;
  double letter_spacing_px = 0.0;
  double line_height = 1.2;
  TextAlign text_align = TextAlign::kLeft;
  bool capitalize = false;
  double left = 0.0;
  double top = 0.0;
  double width = 1.0;
  double angle_deg = 0.0;

  friend bool operator==(const TextLayer&, const TextLayer&) = default;
};

using Layer = std::variant<ImageLayer, TextLayer>;

struct DocumentMetadata {
  std::string title;
  std::string format;
  std::vector<std::string> keywords;

  friend bool operator==(const DocumentMetadata&, const DocumentMetadata&) = default;
};

struct DesignDocument {
  std::string id;
  Canvas canvas;
  std::vector<Layer> layers;  // bottom to top
  DocumentMetadata metadata;

  friend bool operator==(const DesignDocument&, const DesignDocument&) = default;
};

// "#RRGGBB" (case-insensitive on input, uppercase on output).
std::string format_color(Rgb color);
bool parse_color(std::string_view text, Rgb& out);

// Field-level codecs shared with the typography stage. Errors are reported
// as schema violations whose detail is `path` + "." + field.
json text_layer_to_json(const TextLayer& layer);
TextLayer text_layer_from_json(const json& j, const std::string& path);

DesignDocument parse_document(std::string_view bytes);
std::string serialize_document(const DesignDocument& doc);
DesignDocument strip_text_layers(const DesignDocument& doc);

std::vector<std::string> document_texts(const DesignDocument& doc);

}  // namespace designpipe
