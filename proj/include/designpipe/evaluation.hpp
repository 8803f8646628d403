#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "designpipe/clients.hpp"
#include "designpipe/plan.hpp"

namespace designpipe {

enum class Category { kAdvertising, kEvents, kMarketing, kPosts, kCoversHeaders, kCreative };

inline constexpr std::array<Category, 6> kAllCategories = {
    Category::kAdvertising, Category::kEvents,        Category::kMarketing,
    Category::kPosts,       Category::kCoversHeaders, Category::kCreative};

std::string_view to_string(Category c);
std::optional<Category> parse_category(std::string_view name);

struct BenchmarkPrompt {
  std::string id;
  Category category = Category::kAdvertising;
  Intention intention;
};

// JSON lines {"id","category","intention"}; blank lines skipped. Errors are
// kMalformedBenchmark with the 1-based line number as detail.
std::vector<BenchmarkPrompt> parse_benchmark(std::string_view text);
std::vector<BenchmarkPrompt> load_benchmark(const std::filesystem::path& path);

inline constexpr std::array<std::string_view, 5> kAspectNames = {
    "design_layout", "content_relevance", "typography_color", "graphics_images", "innovation"};

// Indexed like kAspectNames; each value in [1, 10].
struct AspectScores {
  std::array<double, 5> values{};

  double& operator[](size_t i) { return values[i]; }
  double operator[](size_t i) const { return values[i]; }
  friend bool operator==(const AspectScores&, const AspectScores&) = default;
};

json scores_to_json(const AspectScores& scores);

std::string build_judge_prompt(const Intention& intention);

// Requires all five keys; integer, decimal or numeric-string values.
// Errors: kNoJsonFound, kInvalidScores naming the key.
AspectScores parse_scores(std::string_view raw);

// Half-up to one decimal, and its "%.1f" form.
double round_one_decimal(double v);
std::string display_one_decimal(double v);

struct EvalRow {
  BenchmarkPrompt prompt;
  AspectScores scores;
};

struct EvalFailure {
  std::string id;
  std::string reason;
};

struct MeanScores {
  std::array<double, 5> aspects{};
  double overall = 0.0;  // mean of the five aspect means
  size_t count = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::optional<MeanScores> means;  // absent when no row was scored
  std::map<Category, MeanScores> per_category;
  std::vector<EvalFailure> failures;

  json to_json() const;
};

// Throws kEmptyInput on no rows.
EvalReport aggregate(const std::vector<EvalRow>& rows);

using ImageProvider = std::function<std::optional<RasterImage>(const std::string& id)>;

struct EvalOptions {
  uint64_t seed = 0;
  int max_retries = 3;
  size_t workers = 1;
  double temperature = 0.0;
  int max_tokens = 256;
};

// Missing images and exhausted retries become failure records. Backend
// failures also become failure records so one bad call does not sink a run.
EvalReport evaluate_run(MultimodalClient& judge, const std::vector<BenchmarkPrompt>& benchmark,
                        const ImageProvider& images, const EvalOptions& options);

}  // namespace designpipe
