#include "designpipe/plan.hpp"

#include <fstream>
#include <numeric>

#include "designpipe/error.hpp"
#include "designpipe/random.hpp"
#include "designpipe/text_util.hpp"

namespace designpipe {

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::kInvalidPlan, field + ": " + what, field);
}

std::string scalar_text(const json& v, const std::string& field) {
  if (v.is_string()) return trim(v.get<std::string>());
  if (v.is_number()) return v.dump();
  invalid(field, "expected text");
}

// Scalar-or-list to a list of trimmed, non-empty strings.
std::vector<std::string> string_list(const json& v, const std::string& field, bool split_commas) {
  std::vector<std::string> out;
  auto push = [&](const std::string& s) {
    if (split_commas) {
      for (const auto& piece : split(s, ',')) {
        if (auto t = trim(piece); !t.empty()) out.push_back(std::move(t));
      }
    } else if (auto t = trim(s); !t.empty()) {
      out.push_back(std::move(t));
    }
  };
  if (v.is_null()) return out;
  if (v.is_array()) {
    for (const auto& item : v) {
      if (item.is_null()) continue;
      if (item.is_array() || item.is_object()) invalid(field, "nested values are not allowed");
      push(scalar_text(item, field));
    }
    return out;
  }
  if (v.is_object()) invalid(field, "expected a list of strings");
  push(scalar_text(v, field));
  return out;
}

const std::string kInstruction =
    "You plan graphic designs. Read a user's intention for a design and write a design plan.\n"
    "A design plan is a JSON object with exactly these keys:\n"
    "  \"description\": one or two sentences describing the whole finished design.\n"
    "  \"keywords\": a list of short tags for the design (palette, subject, style, genre).\n"
    "  \"captions\": an object with \"background\" (what sits behind the main subject) and "
    "\"objects\" (the foreground objects and where they are placed).\n"
    "  \"headings\": an object with \"heading\" and \"subheading\", each a list of the exact "
    "texts to print on the design.\n";

}  // namespace

Intention::Intention(std::string_view text) : text_(trim(text)) {
  if (text_.empty()) throw Error(ErrorKind::kInputError, "intention must not be empty");
}

std::vector<std::string> plan_violations(const DesignPlan& plan) {
  std::vector<std::string> v;
  if (trim(plan.description).empty()) v.emplace_back("description must be non-empty");
  if (plan.keywords.empty()) v.emplace_back("keywords must be a non-empty list");
  for (const auto& k : plan.keywords) {
    if (trim(k).empty()) {
      v.emplace_back("keywords must not contain empty strings");
      break;
    }
  }
  if (trim(plan.captions.background).empty()) v.emplace_back("captions.background must be non-empty");
  if (trim(plan.captions.objects).empty()) v.emplace_back("captions.objects must be non-empty");
  if (plan.headings.heading.empty()) v.emplace_back("headings.heading must be a non-empty list");
  return v;
}

json plan_to_json(const DesignPlan& plan) {
  return json{{"description", plan.description},
              {"keywords", plan.keywords},
              {"captions", {{"background", plan.captions.background}, {"objects", plan.captions.objects}}},
              {"headings", {{"heading", plan.headings.heading}, {"subheading", plan.headings.subheading}}}};
}

std::string serialize_plan(const DesignPlan& plan) { return canonical_dump(plan_to_json(plan)); }

namespace plan_fields {

std::string description(const json& value) {
  if (value.is_array()) return join(string_list(value, "description", false), " ");
  if (value.is_null()) return {};
  return scalar_text(value, "description");
}

std::vector<std::string> keywords(const json& value) {
  // Only a bare string is split; list entries may legitimately contain commas.
  return string_list(value, "keywords", value.is_string());
}

Captions captions(const json& value) {
  if (!value.is_object()) invalid("captions", "expected an object with background and objects");
  Captions c;
  if (auto it = value.find("background"); it != value.end()) {
    c.background = join(string_list(*it, "captions.background", false), " ");
  }
  if (auto it = value.find("objects"); it != value.end()) {
    c.objects = join(string_list(*it, "captions.objects", false), " ");
  }
  return c;
}

Headings headings(const json& value) {
  Headings h;
  if (value.is_object()) {
    if (auto it = value.find("heading"); it != value.end()) {
      h.heading = string_list(*it, "headings.heading", false);
    }
    if (auto it = value.find("subheading"); it != value.end()) {
      h.subheading = string_list(*it, "headings.subheading", false);
    }
    return h;
  }
  // A bare string or list is read as the heading list.
  h.heading = string_list(value, "headings", false);
  return h;
}

}  // namespace plan_fields

DesignPlan plan_from_json(const json& object) {
  if (!object.is_object()) invalid("plan", "expected a JSON object");
  DesignPlan plan;
  if (auto it = object.find("description"); it != object.end()) {
    plan.description = plan_fields::description(*it);
  }
  if (auto it = object.find("keywords"); it != object.end()) plan.keywords = plan_fields::keywords(*it);
  if (auto it = object.find("captions"); it != object.end()) plan.captions = plan_fields::captions(*it);
  if (auto it = object.find("headings"); it != object.end()) plan.headings = plan_fields::headings(*it);
  if (const auto v = plan_violations(plan); !v.empty()) {
    throw Error(ErrorKind::kInvalidPlan, "invalid design plan: " + join(v, "; "), join(v, "; "));
  }
  return plan;
}

DesignPlan parse_design_plan(std::string_view raw) { return plan_from_json(extract_json_object(raw)); }

json exemplar_to_json(const Exemplar& exemplar) {
  return json{{"intention", exemplar.intention.text()}, {"plan", plan_to_json(exemplar.plan)}};
}

Exemplar exemplar_from_json(const json& j) {
  if (!j.is_object() || !j.contains("intention") || !j["intention"].is_string() ||
      !j.contains("plan")) {
    throw Error(ErrorKind::kSchemaViolation, "exemplar needs \"intention\" and \"plan\"");
  }
  return Exemplar{Intention(j["intention"].get<std::string>()), plan_from_json(j["plan"])};
}

std::vector<Exemplar> load_exemplars(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kInputError, "cannot open exemplar store " + path.string());
  std::vector<Exemplar> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorKind::kMalformedSyntax,
                  path.string() + ":" + std::to_string(line_no) + ": not valid JSON");
    }
    try {
      out.push_back(exemplar_from_json(j));
    } catch (const Error& e) {
      throw Error(ErrorKind::kSchemaViolation,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Exemplar> sample_exemplars(const std::vector<Exemplar>& store, size_t k,
                                       uint64_t seed) {
  if (k < 1) throw Error(ErrorKind::kInputError, "exemplar count must be at least 1");
  if (store.size() < k) {
    throw Error(ErrorKind::kInsufficientExemplars,
                "exemplar store has " + std::to_string(store.size()) + " entries, need " +
                    std::to_string(k));
  }
  std::vector<size_t> idx(store.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  Rng rng(seed);
  std::vector<Exemplar> out;
  out.reserve(k);
  for (size_t i = 0; i < k; ++i) {
    const size_t j = i + static_cast<size_t>(uniform_below(rng, store.size() - i));
    std::swap(idx[i], idx[j]);
    out.push_back(store[idx[i]]);
  }
  return out;
}

std::string build_icl_prompt(const Intention& intention, const std::vector<Exemplar>& exemplars) {
  std::string prompt = kInstruction;
  prompt += "\nExamples:\n";
  for (const auto& ex : exemplars) {
    prompt += "\nIntention: " + normalize_whitespace(ex.intention.text()) + "\n";
    prompt += "Design plan: " + serialize_plan(ex.plan) + "\n";
  }
  prompt +=
      "\nNow write the design plan for the intention below. Answer with the JSON object only, "
      "with no other text.\n";
  prompt += "\nIntention: " + normalize_whitespace(intention.text()) + "\n";
  prompt += "Design plan:";
  return prompt;
}

Generated<DesignPlan> generate_design_plan(TextGenClient& client, const Intention& intention,
                                           const std::vector<Exemplar>& store,
                                           const PlanGenerationOptions& options) {
  if (options.max_retries < 1) throw Error(ErrorKind::kInputError, "max_retries must be >= 1");
  std::string last_error = "no attempts";
  for (int attempt = 0; attempt < options.max_retries; ++attempt) {
    const uint64_t seed = options.seed + static_cast<uint64_t>(attempt);
    const auto exemplars = sample_exemplars(store, options.num_exemplars, seed);
    const std::string prompt = build_icl_prompt(intention, exemplars);
    const std::string raw =
        client.complete(prompt, SamplingParams{options.temperature, seed, options.max_tokens});
    try {
      return {parse_design_plan(raw), attempt + 1};
    } catch (const Error& e) {
      if (!is_retryable(e.kind())) throw;
      last_error = std::string(to_string(e.kind())) + ": " + e.what();
    }
  }
  throw Error(ErrorKind::kGenerationExhausted,
              "design plan generation failed after " + std::to_string(options.max_retries) +
                  " attempts; last error: " + last_error,
              last_error);
}

}  // namespace designpipe
