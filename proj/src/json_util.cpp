#include "designpipe/json_util.hpp"

#include <cctype>
#include <cmath>

#include "designpipe/error.hpp"

namespace designpipe {

namespace {

// Returns the end index (one past the closing brace) of the object starting
// at `open`, honoring both quote styles, or npos if unbalanced.
size_t match_object(std::string_view s, size_t open) {
  int depth = 0;
  char quote = 0;
  for (size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (quote != 0) {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

// Rewrites single-quoted strings as double-quoted ones and drops trailing
// commas before a closing bracket.
std::string repair_json_text(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 8);
  char quote = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quote == '"') {
      out.push_back(c);
      if (c == '\\' && i + 1 < s.size()) {
        out.push_back(s[++i]);
      } else if (c == '"') {
        quote = 0;
      }
      continue;
    }
    if (quote == '\'') {
      if (c == '\\' && i + 1 < s.size()) {
        const char next = s[++i];
        if (next == '\'') {
          out.push_back('\'');
        } else {
          out.push_back('\\');
          out.push_back(next);
        }
      } else if (c == '\'') {
        out.push_back('"');
        quote = 0;
      } else if (c == '"') {
        out += "\\\"";
      } else {
        out.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quote = '"';
      out.push_back(c);
    } else if (c == '\'') {
      quote = '\'';
      out.push_back('"');
    } else if (c == '}' || c == ']') {
      size_t k = out.size();
      while (k > 0 && std::isspace(static_cast<unsigned char>(out[k - 1]))) --k;
      if (k > 0 && out[k - 1] == ',') out.erase(k - 1, 1);
      out.push_back(c);
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::optional<json> parse_candidate(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (!j.is_discarded() && j.is_object()) return j;
  j = json::parse(repair_json_text(text), nullptr, false);
  if (!j.is_discarded() && j.is_object()) return j;
  return std::nullopt;
}

}  // namespace

std::optional<json> try_extract_json_object(std::string_view raw) {
  for (size_t open = raw.find('{'); open != std::string_view::npos;
       open = raw.find('{', open + 1)) {
    const size_t end = match_object(raw, open);
    if (end == std::string_view::npos) continue;
    if (auto j = parse_candidate(raw.substr(open, end - open))) return j;
  }
  return std::nullopt;
}

json extract_json_object(std::string_view raw) {
  if (auto j = try_extract_json_object(raw)) return *std::move(j);
  throw Error(ErrorKind::kNoJsonFound, "no JSON object found in model output");
}

double quantize(double v) {
  const double q = std::round(v * 1e6) / 1e6;
  return q == 0.0 ? 0.0 : q;
}

std::string canonical_dump(const json& j) { return j.dump(); }

}  // namespace designpipe
