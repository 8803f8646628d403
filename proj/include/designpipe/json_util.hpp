#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace designpipe {

using json = nlohmann::json;

// Finds the first JSON object embedded in free-form model output.
//
// Tolerates markdown code fences, prose before and after the object,
// single-quoted strings and trailing commas. Candidates are tried in order of
// their opening brace; the first one that parses wins. Throws
// Error(kNoJsonFound) when nothing parses.
json extract_json_object(std::string_view raw);

// Same as extract_json_object but returns nullopt instead of throwing.
std::optional<json> try_extract_json_object(std::string_view raw);

// Rounds to 6 decimal places and folds -0 to +0. Applied to every real value
// that enters a canonical structure so that serialization is a fixed point.
double quantize(double v);

// Compact dump with lexicographically sorted keys (nlohmann's default map).
std::string canonical_dump(const json& j);

}  // namespace designpipe
