#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace designpipe {

std::string trim(std::string_view s);

// Collapses every run of whitespace to one space and trims both ends.
std::string normalize_whitespace(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// UTF-8 decoding replaces invalid sequences with U+FFFD.
std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(std::u32string_view s);

// Uppercases ASCII and Latin-1 letters; everything else passes through.
std::u32string to_upper(std::u32string_view s);

bool contains(std::string_view haystack, std::string_view needle);

}  // namespace designpipe
