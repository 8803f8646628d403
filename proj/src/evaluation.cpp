#include "designpipe/evaluation.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <thread>

#include "designpipe/error.hpp"
#include "designpipe/text_util.hpp"

namespace designpipe {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::kAdvertising: return "advertising";
    case Category::kEvents: return "events";
    case Category::kMarketing: return "marketing";
    case Category::kPosts: return "posts";
    case Category::kCoversHeaders: return "covers_headers";
    case Category::kCreative: return "creative";
  }
  return "unknown";
}

std::optional<Category> parse_category(std::string_view name) {
  for (Category c : kAllCategories) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

std::vector<BenchmarkPrompt> parse_benchmark(std::string_view text) {
  std::vector<BenchmarkPrompt> out;
  std::set<std::string> seen;
  size_t line_no = 0;
  for (const std::string& raw_line : split(text, '\n')) {
    ++line_no;
    const std::string line = trim(raw_line);
    if (line.empty()) continue;
    const std::string where = std::to_string(line_no);
    auto bad = [&](const std::string& why) {
      return Error(ErrorKind::kMalformedBenchmark, "benchmark line " + where + ": " + why, where);
    };
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw bad("not a JSON object");
    for (const char* key : {"id", "category", "intention"}) {
      if (!j.contains(key) || !j[key].is_string()) {
        throw bad(std::string("missing string field \"") + key + "\"");
      }
    }
    BenchmarkPrompt p;
    p.id = j["id"].get<std::string>();
    if (p.id.empty()) throw bad("empty id");
    auto cat = parse_category(j["category"].get<std::string>());
    if (!cat) throw bad("unknown category \"" + j["category"].get<std::string>() + "\"");
    p.category = *cat;
    if (trim(j["intention"].get<std::string>()).empty()) throw bad("empty intention");
    p.intention = Intention(j["intention"].get<std::string>());
    if (!seen.insert(p.id).second) throw bad("duplicate id \"" + p.id + "\"");
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<BenchmarkPrompt> load_benchmark(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInputError, "cannot read benchmark " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_benchmark(text);
}

json scores_to_json(const AspectScores& scores) {
  json j = json::object();
  for (size_t i = 0; i < kAspectNames.size(); ++i) j[std::string(kAspectNames[i])] = scores[i];
  return j;
}

std::string build_judge_prompt(const Intention& intention) {
  std::string out =
      "You are an experienced graphic designer reviewing a generated design. The attached "
      "image was made for the request below.\n\n"
      "Request: ";
  out += intention.text();
  out +=
      "\n\nScore the design on each of the following five aspects on a scale from 1 (poor) "
      "to 10 (excellent):\n"
      "- design_layout: design and layout\n"
      "- content_relevance: relevance of the content to the request\n"
      "- typography_color: typography and color\n"
      "- graphics_images: graphics and images\n"
      "- innovation: innovation and originality\n\n"
      "Reply with a single JSON object containing exactly these five keys with numeric "
      "scores from 1 to 10, for example {\"design_layout\": 7, \"content_relevance\": 8, "
      "\"typography_color\": 6, \"graphics_images\": 7, \"innovation\": 5}. Do not add "
      "anything else.";
  return out;
}

AspectScores parse_scores(std::string_view raw) {
  const json object = extract_json_object(raw);
  AspectScores scores;
  for (size_t i = 0; i < kAspectNames.size(); ++i) {
    const std::string key(kAspectNames[i]);
    if (!object.contains(key)) {
      throw Error(ErrorKind::kInvalidScores, "missing score \"" + key + "\"", key);
    }
    const json& v = object.at(key);
    double value = 0.0;
    if (v.is_number()) {
      value = v.get<double>();
    } else if (v.is_string()) {
      const std::string s = trim(v.get<std::string>());
      char* end = nullptr;
      value = std::strtod(s.c_str(), &end);
      if (s.empty() || end != s.c_str() + s.size()) {
        throw Error(ErrorKind::kInvalidScores, "score \"" + key + "\" is not a number", key);
      }
    } else {
      throw Error(ErrorKind::kInvalidScores, "score \"" + key + "\" is not a number", key);
    }
    if (!std::isfinite(value) || value < 1.0 || value > 10.0) {
      throw Error(ErrorKind::kInvalidScores, "score \"" + key + "\" outside [1, 10]", key);
    }
    scores[i] = value;
  }
  return scores;
}

double round_one_decimal(double v) {
  // The epsilon keeps values like 6.25 or 6.35, whose binary form sits a hair
  // below the half, rounding up as written.
  return std::floor(v * 10.0 + 0.5 + 1e-9) / 10.0;
}

std::string display_one_decimal(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", round_one_decimal(v));
  return buf;
}

namespace {

MeanScores mean_of(const std::vector<const AspectScores*>& rows) {
  MeanScores m;
  m.count = rows.size();
  for (size_t a = 0; a < 5; ++a) {
    double sum = 0.0;
    for (const auto* r : rows) sum += (*r)[a];
    m.aspects[a] = sum / static_cast<double>(rows.size());
  }
  double total = 0.0;
  for (double v : m.aspects) total += v;
  m.overall = total / 5.0;
  return m;
}

json means_to_json(const MeanScores& m) {
  json aspects = json::object();
  for (size_t a = 0; a < 5; ++a) {
    aspects[std::string(kAspectNames[a])] = {{"mean", m.aspects[a]},
                                            {"display", display_one_decimal(m.aspects[a])}};
  }
  return {{"count", m.count},
          {"aspects", aspects},
          {"overall", {{"mean", m.overall}, {"display", display_one_decimal(m.overall)}}}};
}

}  // namespace

EvalReport aggregate(const std::vector<EvalRow>& rows) {
  if (rows.empty()) throw Error(ErrorKind::kEmptyInput, "no scored rows to aggregate");
  EvalReport report;
  report.rows = rows;
  std::vector<const AspectScores*> all;
  std::map<Category, std::vector<const AspectScores*>> by_cat;
  for (const auto& r : report.rows) {
    all.push_back(&r.scores);
    by_cat[r.prompt.category].push_back(&r.scores);
  }
  report.means = mean_of(all);
  for (const auto& [cat, subset] : by_cat) report.per_category[cat] = mean_of(subset);
  return report;
}

json EvalReport::to_json() const {
  json j = json::object();
  j["scored"] = rows.size();
  j["means"] = means ? means_to_json(*means) : json();
  json cats = json::object();
  for (const auto& [cat, m] : per_category) cats[std::string(to_string(cat))] = means_to_json(m);
  j["per_category"] = cats;
  json r = json::array();
  for (const auto& row : rows) {
    r.push_back({{"id", row.prompt.id},
                 {"category", to_string(row.prompt.category)},
                 {"scores", scores_to_json(row.scores)}});
  }
  j["rows"] = r;
  json f = json::array();
  for (const auto& x : failures) f.push_back({{"id", x.id}, {"reason", x.reason}});
  j["failures"] = f;
  return j;
}

EvalReport evaluate_run(MultimodalClient& judge, const std::vector<BenchmarkPrompt>& benchmark,
                        const ImageProvider& images, const EvalOptions& options) {
  const int retries = std::max(1, options.max_retries);
  struct Slot {
    std::optional<AspectScores> scores;
    std::string failure;
  };
  std::vector<Slot> slots(benchmark.size());
  std::atomic<size_t> next{0};

  auto judge_one = [&](size_t i) {
    const BenchmarkPrompt& p = benchmark[i];
    std::optional<RasterImage> image;
    try {
      image = images ? images(p.id) : std::nullopt;
    } catch (const std::exception& e) {
      slots[i].failure = std::string("image unreadable: ") + e.what();
      return;
    }
    if (!image) {
      slots[i].failure = "missing image";
      return;
    }
    const std::string prompt = build_judge_prompt(p.intention);
    std::string last_error;
    for (int attempt = 0; attempt < retries; ++attempt) {
      try {
        const std::string raw = judge.complete(
            *image, prompt,
            SamplingParams{options.temperature, options.seed + static_cast<uint64_t>(attempt),
                           options.max_tokens});
        slots[i].scores = parse_scores(raw);
        return;
      } catch (const Error& e) {
        last_error = std::string(to_string(e.kind())) + ": " + e.what();
        if (!is_retryable(e.kind())) break;
      }
    }
    slots[i].failure = "judging failed after retries; last error: " + last_error;
  };

  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= benchmark.size()) return;
      judge_one(i);
    }
  };
  const size_t workers = std::max<size_t>(1, std::min(options.workers, benchmark.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<EvalRow> rows;
  std::vector<EvalFailure> failures;
  for (size_t i = 0; i < benchmark.size(); ++i) {
    if (slots[i].scores) {
      rows.push_back({benchmark[i], *slots[i].scores});
    } else {
      failures.push_back({benchmark[i].id, slots[i].failure});
    }
  }
  EvalReport report;
  if (!rows.empty()) report = aggregate(rows);
  report.failures = std::move(failures);
  return report;
}

}  // namespace designpipe
