#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "designpipe/font.hpp"
#include "designpipe/json_util.hpp"

namespace testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(FIXTURE_DIR) / name;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

// Test Mono (unit advance 0.5, ascent 0.8, descent 0.2) as default, plus
// Test Wide (capitals only).
inline designpipe::FontCatalog test_fonts() {
  designpipe::FontCatalog fonts;
  fonts.add(designpipe::SyntheticFont::load(fixture("fonts/test_mono.font.json")));
  fonts.add(designpipe::SyntheticFont::load(fixture("fonts/test_wide.font.json")));
  return fonts;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("designpipe_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
