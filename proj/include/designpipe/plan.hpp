#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "designpipe/clients.hpp"
#include "designpipe/json_util.hpp"

namespace designpipe {

// A short user request; always stored trimmed and non-empty.
class Intention {
public:
  Intention() = default;
  explicit Intention(std::string_view text);  // throws kInputError when blank

  const std::string& text() const { return text_; }
  friend bool operator==(const Intention&, const Intention&) = default;

private:
  std::string text_;
};

struct Captions {
  std::string background;
  std::string objects;
  friend bool operator==(const Captions&, const Captions&) = default;
};

struct Headings {
  std::vector<std::string> heading;
  std::vector<std::string> subheading;
  friend bool operator==(const Headings&, const Headings&) = default;
};

struct DesignPlan {
  std::string description;
  std::vector<std::string> keywords;
  Captions captions;
  Headings headings;
  friend bool operator==(const DesignPlan&, const DesignPlan&) = default;
};

struct Exemplar {
  Intention intention;
  DesignPlan plan;
  friend bool operator==(const Exemplar&, const Exemplar&) = default;
};

template <typename T>
struct Generated {
  T value;
  int attempts = 0;
};

// Names of the invariants `plan` breaks; empty when valid.
std::vector<std::string> plan_violations(const DesignPlan& plan);

json plan_to_json(const DesignPlan& plan);
std::string serialize_plan(const DesignPlan& plan);

// Field readers applying the model-output repair rules: scalars become
// one-element lists, comma-separated keyword strings are split, strings are
// trimmed and empty list entries dropped. Each throws kInvalidPlan naming
// the field when the shape cannot be repaired.
namespace plan_fields {
std::string description(const json& value);
std::vector<std::string> keywords(const json& value);
Captions captions(const json& value);
Headings headings(const json& value);
}  // namespace plan_fields

// Builds a plan from an already-extracted object; unknown keys are dropped.
DesignPlan plan_from_json(const json& object);

// Extracts the first JSON object from raw model output, repairs and validates.
DesignPlan parse_design_plan(std::string_view raw);

json exemplar_to_json(const Exemplar& exemplar);
Exemplar exemplar_from_json(const json& j);
// One exemplar per line; blank lines ignored.
std::vector<Exemplar> load_exemplars(const std::filesystem::path& path);

// k distinct exemplars drawn uniformly without replacement (partial
// Fisher-Yates over mt19937_64), in draw order.
std::vector<Exemplar> sample_exemplars(const std::vector<Exemplar>& store, size_t k,
                                       uint64_t seed);

std::string build_icl_prompt(const Intention& intention, const std::vector<Exemplar>& exemplars);

struct PlanGenerationOptions {
  uint64_t seed = 0;
  int max_retries = 3;
  size_t num_exemplars = 5;
  double temperature = 0.7;
  int max_tokens = 1024;
};

// Attempt i (0-based) samples exemplars and the completion with seed + i.
Generated<DesignPlan> generate_design_plan(TextGenClient& client, const Intention& intention,
                                           const std::vector<Exemplar>& store,
                                           const PlanGenerationOptions& options);

}  // namespace designpipe
