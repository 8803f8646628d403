#include "designpipe/font.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "designpipe/error.hpp"
#include "designpipe/json_util.hpp"

namespace designpipe {

namespace {

GlyphOutline block_outline(double advance, const FaceMetrics& m) {
  GlyphOutline outline;
  outline.contours.push_back(
      {{0.0, -m.descent}, {advance, -m.descent}, {advance, m.ascent}, {0.0, m.ascent}});
  return outline;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInputError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

SyntheticFont::SyntheticFont(Description desc)
    : family_(std::move(desc.family)), metrics_(desc.metrics) {
  if (metrics_.ascent <= 0) throw Error(ErrorKind::kInputError, "font ascent must be positive");
  advances_.push_back(desc.notdef_advance);
  outlines_.push_back(block_outline(desc.notdef_advance, metrics_));
  for (const auto& [cp, adv] : desc.advances) {
    if (adv < 0) throw Error(ErrorKind::kInputError, "glyph advance must be non-negative");
    cmap_[cp] = static_cast<GlyphId>(advances_.size());
    advances_.push_back(adv);
    const bool blank = std::find(desc.blank.begin(), desc.blank.end(), cp) != desc.blank.end();
    outlines_.push_back(blank ? GlyphOutline{} : block_outline(adv, metrics_));
  }
}

std::shared_ptr<SyntheticFont> SyntheticFont::from_json(std::string_view text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorKind::kMalformedSyntax, "font description is not a JSON object");
  }
  try {
    Description desc;
    desc.family = j.at("family").get<std::string>();
    desc.metrics.ascent = j.at("ascent").get<double>();
    desc.metrics.descent = j.at("descent").get<double>();
    desc.metrics.line_gap = j.value("line_gap", 0.0);
    desc.notdef_advance = j.value("notdef_advance", 0.5);
    if (auto it = j.find("ranges"); it != j.end()) {
      for (const auto& r : *it) {
        const auto first = r.at(0).get<uint32_t>();
        const auto last = r.at(1).get<uint32_t>();
        const double adv = r.at(2).get<double>();
        for (uint32_t cp = first; cp <= last; ++cp) desc.advances[cp] = adv;
      }
    }
    if (auto it = j.find("advances"); it != j.end()) {
      for (const auto& [key, value] : it->items()) {
        desc.advances[static_cast<char32_t>(std::stoul(key))] = value.get<double>();
      }
    }
    if (auto it = j.find("blank"); it != j.end()) {
      for (const auto& cp : *it) desc.blank.push_back(cp.get<uint32_t>());
    }
    return std::make_shared<SyntheticFont>(std::move(desc));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kSchemaViolation, std::string("font description: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(ErrorKind::kSchemaViolation, std::string("font description: ") + e.what());
  }
}

std::shared_ptr<SyntheticFont> SyntheticFont::load(const std::filesystem::path& path) {
  return from_json(read_file(path));
}

std::optional<GlyphId> SyntheticFont::glyph_for(char32_t codepoint) const {
  auto it = cmap_.find(codepoint);
  if (it == cmap_.end()) return std::nullopt;
  return it->second;
}

double SyntheticFont::advance(GlyphId glyph) const {
  return glyph < advances_.size() ? advances_[glyph] : advances_[0];
}

const GlyphOutline& SyntheticFont::outline(GlyphId glyph) const {
  return glyph < outlines_.size() ? outlines_[glyph] : outlines_[0];
}

void FontCatalog::add(std::shared_ptr<const FontFace> face) {
  const std::string family = face->family();
  if (faces_.contains(family)) return;
  faces_.emplace(family, std::move(face));
  if (default_family_.empty()) default_family_ = family;
}

void FontCatalog::set_default_family(const std::string& family) {
  if (!faces_.contains(family)) {
    throw Error(ErrorKind::kInputError, "default font family not in catalog: " + family);
  }
  default_family_ = family;
}

bool FontCatalog::contains(std::string_view family) const {
  return faces_.find(family) != faces_.end();
}

const FontFace* FontCatalog::find(std::string_view family) const {
  auto it = faces_.find(family);
  return it == faces_.end() ? nullptr : it->second.get();
}

const FontFace& FontCatalog::default_face() const {
  const FontFace* face = find(default_family_);
  if (face == nullptr) throw Error(ErrorKind::kInputError, "font catalog is empty");
  return *face;
}

std::vector<std::string> FontCatalog::families() const {
  std::vector<std::string> out;
  for (const auto& [name, face] : faces_) out.push_back(name);
  return out;
}

FontCatalog FontCatalog::load_directory(const std::filesystem::path& dir,
                                        std::vector<std::string>* skipped) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::kInputError, "font directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  FontCatalog catalog;
  for (const auto& path : paths) {
    const std::string name = path.filename().string();
    try {
      if (name.ends_with(".font.json")) {
        catalog.add(SyntheticFont::load(path));
      } else if (name.ends_with(".ttf") || name.ends_with(".TTF")) {
        catalog.add(TrueTypeFont::load(path));
      }
    } catch (const Error& e) {
      if (skipped != nullptr) skipped->push_back(name + ": " + e.what());
    }
  }
  return catalog;
}

FontCatalog FontCatalog::builtin() {
  SyntheticFont::Description desc;
  desc.family = "Block Sans";
  desc.metrics = {0.75, 0.2, 0.05};
  desc.notdef_advance = 0.55;
  for (char32_t cp = 0x20; cp <= 0x7E; ++cp) desc.advances[cp] = 0.55;
  for (char32_t cp = 0xA0; cp <= 0xFF; ++cp) desc.advances[cp] = 0.55;
  desc.advances[U' '] = 0.3;
  desc.advances[0xA0] = 0.3;
  desc.blank = {U' ', 0xA0};
  FontCatalog catalog;
  catalog.add(std::make_shared<SyntheticFont>(std::move(desc)));
  return catalog;
}

}  // namespace designpipe
