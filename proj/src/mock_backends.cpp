#include "designpipe/mock_backends.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>

#include "designpipe/digest.hpp"
#include "designpipe/text_util.hpp"

namespace designpipe {

namespace {

// Value after the last occurrence of `label` up to the end of that line.
std::optional<std::string> line_value(const std::string& prompt, std::string_view label) {
  const size_t pos = prompt.rfind(label);
  if (pos == std::string::npos) return std::nullopt;
  const size_t start = pos + label.size();
  const size_t end = prompt.find('\n', start);
  return trim(prompt.substr(start, end == std::string::npos ? std::string::npos : end - start));
}

std::vector<std::string> quoted_phrases(const std::string& text) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (true) {
    const size_t a = text.find('"', pos);
    if (a == std::string::npos) break;
    const size_t b = text.find('"', a + 1);
    if (b == std::string::npos) break;
    std::string p = trim(text.substr(a + 1, b - a - 1));
    if (!p.empty()) out.push_back(p);
    pos = b + 1;
  }
  return out;
}

const std::set<std::string>& stop_words() {
  static const std::set<std::string> words = {
      "a",     "an",    "the",    "and",    "for",   "with",  "that",  "this",  "from",
      "into",  "onto",  "about",  "need",   "want",  "make",  "create", "design", "please",
      "some",  "have",  "will",   "would",  "should", "could", "their", "there", "which",
      "your",  "our",   "my",     "using",  "show",  "shows", "showing", "featuring", "look",
      "style", "text",  "texts",  "also",   "like",  "they",  "them",  "what",  "when"};
  return words;
}

std::vector<std::string> content_words(const std::string& text) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& raw : split_whitespace(text)) {
    std::string w;
    for (char c : raw) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
    }
    if (w.size() < 4 || stop_words().count(w) || !seen.insert(w).second) continue;
    out.push_back(w);
  }
  return out;
}

std::string title_case(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    out += w.substr(1);
  }
  return out;
}

const char* const kPalette[] = {"warm orange", "deep blue", "soft pink", "forest green",
                                "golden yellow", "lavender", "teal", "crimson"};
const char* const kTaglines[] = {"Limited time only", "Join us", "Learn more today",
                                 "Don't miss out", "See you there", "Made with care"};

std::string plan_reply(const std::string& intention) {
  const uint64_t h = hash64(intention);
  const auto words = content_words(intention);
  std::vector<std::string> keywords(words.begin(), words.begin() + std::min<size_t>(5, words.size()));
  if (keywords.empty()) keywords.push_back("graphic");
  const std::string color = kPalette[h % std::size(kPalette)];
  keywords.push_back(split_whitespace(color).back());

  const auto quotes = quoted_phrases(intention);
  std::vector<std::string> heading;
  std::vector<std::string> subheading;
  if (!quotes.empty()) {
    heading.push_back(quotes[0]);
    for (size_t i = 1; i < quotes.size(); ++i) subheading.push_back(quotes[i]);
  } else {
    std::vector<std::string> first(words.begin(), words.begin() + std::min<size_t>(3, words.size()));
    heading.push_back(first.empty() ? std::string("Hello") : title_case(first));
  }
  if (subheading.empty()) subheading.push_back(kTaglines[(h >> 8) % std::size(kTaglines)]);

  const std::string subject = words.empty() ? std::string("abstract shapes") : words.front();
  json plan = {
      {"description", "A clean graphic design for the request: " + normalize_whitespace(intention)},
      {"keywords", keywords},
      {"captions",
       {{"background", "A smooth " + color + " background with a soft gradient and a light "
                       "open area across the top."},
        {"objects", "A simple flat illustration of " + subject +
                        " placed in the lower half of the canvas."}}},
      {"headings", {{"heading", heading}, {"subheading", subheading}}}};
  return "Here is the design plan:\n```json\n" + plan.dump(2) + "\n```";
}

std::string intention_reply(const std::string& prompt) {
  std::string title = line_value(prompt, "\ntitle: ").value_or("unknown");
  std::string format = line_value(prompt, "\nformat: ").value_or("unknown");
  const std::string texts_raw = line_value(prompt, "\ntexts: ").value_or("unknown");
  std::vector<std::string> texts;
  if (texts_raw != "unknown") {
    json j = json::parse(texts_raw, nullptr, false);
    if (j.is_array()) {
      for (const auto& t : j) {
        if (t.is_string()) texts.push_back(t.get<std::string>());
      }
    }
  }
  if (format == "unknown") format = "graphic design";
  std::string out = "Create a " + format;
  if (title != "unknown") out += " for \"" + title + "\"";
  if (!texts.empty()) out += " with the headline \"" + texts.front() + "\"";
  if (texts.size() > 1) out += " and the line \"" + texts[1] + "\"";
  out += ".";
  return "\"" + out + "\"";
}

struct ImageStats {
  double r = 0, g = 0, b = 0;
  double upper_luma = 0;
};

ImageStats image_stats(const RasterImage& image) {
  ImageStats s;
  if (image.empty()) return s;
  const int step_x = std::max(1, image.width() / 64);
  const int step_y = std::max(1, image.height() / 64);
  double n = 0, nu = 0;
  for (int y = 0; y < image.height(); y += step_y) {
    for (int x = 0; x < image.width(); x += step_x) {
      const uint8_t* p = image.at(x, y);
      s.r += p[0];
      s.g += p[1];
      s.b += p[2];
      n += 1;
      if (y < image.height() / 3) {
        s.upper_luma += 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        nu += 1;
      }
    }
  }
  s.r /= n;
  s.g /= n;
  s.b /= n;
  s.upper_luma = nu > 0 ? s.upper_luma / nu : 255.0;
  return s;
}

std::string color_name(const ImageStats& s) {
  const double mx = std::max({s.r, s.g, s.b});
  const double mn = std::min({s.r, s.g, s.b});
  if (mx - mn < 24) return mx > 170 ? "white" : (mx < 70 ? "black" : "gray");
  if (mx == s.r) return s.g > 0.7 * s.r ? "yellow" : "red";
  if (mx == s.g) return s.b > 0.7 * s.g ? "teal" : "green";
  return s.r > 0.7 * s.b ? "purple" : "blue";
}

}  // namespace

TextResponder mock_text_responder() {
  return [](const std::string& prompt, const SamplingParams&) -> std::string {
    if (prompt.size() >= 12 && prompt.ends_with("Design plan:")) {
      return plan_reply(line_value(prompt, "\nIntention: ").value_or(""));
    }
    if (contains(prompt, "\nDesign information:\n")) return intention_reply(prompt);
    return kMockRefusal;
  };
}

MultimodalResponder mock_extraction_responder() {
  return [](const RasterImage& image, const std::string& prompt,
            const SamplingParams&) -> std::string {
    const ImageStats s = image_stats(image);
    const std::string color = color_name(s);
    if (contains(prompt, "{\"headings\"")) {
      std::vector<std::string> texts;
      if (auto raw = line_value(prompt, "Texts on the design: ")) {
        json j = json::parse(*raw, nullptr, false);
        if (j.is_array()) {
          for (const auto& t : j) {
            if (t.is_string() && !trim(t.get<std::string>()).empty()) {
              texts.push_back(normalize_whitespace(t.get<std::string>()));
            }
          }
        }
      }
      if (texts.empty()) texts.push_back("Untitled design");
      json h = {{"heading", {texts.front()}},
                {"subheading", std::vector<std::string>(texts.begin() + 1, texts.end())}};
      return json{{"headings", h}}.dump();
    }
    if (contains(prompt, "{\"captions\"")) {
      return json{{"captions",
                   {{"background", "A flat " + color + " background with a lighter band near "
                                   "the top."},
                    {"objects", "A round shape in the lower half of the design."}}}}
          .dump();
    }
    if (contains(prompt, "{\"keywords\"")) {
      return json{{"keywords", {color, "flat", "minimal", "poster"}}}.dump();
    }
    if (contains(prompt, "{\"description\"")) {
      return json{{"description", "A minimal " + color +
                                      " design with a light panel at the top and a round "
                                      "shape below it."}}
          .dump();
    }
    return kMockRefusal;
  };
}

MultimodalResponder mock_typography_responder(std::string font_family) {
  return [family = std::move(font_family)](const RasterImage& image, const std::string& prompt,
                                           const SamplingParams&) -> std::string {
    int w = 0, h = 0;
    const auto canvas = line_value(prompt, "Canvas: ");
    if (!canvas || std::sscanf(canvas->c_str(), "%d x %d", &w, &h) != 2 || w <= 0 || h <= 0) {
      return kMockRefusal;
    }
    json texts = json::parse(line_value(prompt, "Texts (JSON list, in order): ").value_or(""),
                             nullptr, false);
    if (!texts.is_array()) return kMockRefusal;
    const std::string color = image_stats(image).upper_luma > 140 ? "#1A1A1A" : "#FFFFFF";
    json out = json::array();
    double top = 0.08;
    for (size_t i = 0; i < texts.size(); ++i) {
      const std::string text = texts[i].is_string() ? texts[i].get<std::string>() : "";
      const double size = std::round((i % 2 == 0 ? 0.08 : 0.05) * h);
      size_t lines = 1 + static_cast<size_t>(std::count(text.begin(), text.end(), '\n'));
      out.push_back({{"text", text},
                     {"font_family", family},
                     {"font_size_px", size},
                     {"color", color},
                     {"letter_spacing_px", 0},
                     {"line_height", 1.2},
                     {"text_align", "center"},
                     {"capitalize", false},
                     {"left", 0.1},
                     {"top", std::round(top * 1e4) / 1e4},
                     {"width", 0.8},
                     {"angle_deg", 0}});
      top += static_cast<double>(lines) * 1.2 * size / h + 0.015;
    }
    return json{{"texts", out}}.dump();
  };
}

MultimodalResponder mock_judge_responder(std::optional<double> constant) {
  return [constant](const RasterImage& image, const std::string& prompt,
                    const SamplingParams&) -> std::string {
    json j = json::object();
    const std::string key = sha256_hex(image.pixels()) + "|" + prompt;
    for (size_t i = 0; i < 5; ++i) {
      static const char* const names[] = {"design_layout", "content_relevance",
                                          "typography_color", "graphics_images", "innovation"};
      if (constant) {
        j[names[i]] = *constant;
      } else {
        const uint64_t h = hash64(key + "#" + std::to_string(i));
        j[names[i]] = 4.0 + static_cast<double>(h % 51) / 10.0;
      }
    }
    return j.dump();
  };
}

}  // namespace designpipe
