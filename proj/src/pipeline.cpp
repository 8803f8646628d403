#include "designpipe/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <thread>

#include "designpipe/error.hpp"
#include "designpipe/image_gen.hpp"
#include "designpipe/mock_backends.hpp"
#include "designpipe/renderer.hpp"
#include "designpipe/typography.hpp"

#ifndef DESIGNPIPE_DATA_DIR
#define DESIGNPIPE_DATA_DIR "data"
#endif

namespace designpipe {

namespace fs = std::filesystem;

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kInputError, "cannot write " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInputError, "cannot read " + path.string(), path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

namespace {

void write_png(const fs::path& path, const RasterImage& image) {
  const auto bytes = encode_png(image);
  write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

RasterImage read_png(const fs::path& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_png(
        std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size()));
  } catch (const Error& e) {
    throw Error(ErrorKind::kInputError, path.string() + ": " + e.what(), path.string());
  }
}

HttpEndpoint endpoint_from_json(const json& j, const std::string& name) {
  if (!j.is_object()) {
    throw Error(ErrorKind::kInputError, "config: services." + name + " must be an object");
  }
  HttpEndpoint e;
  for (const auto& [key, value] : j.items()) {
    if (key == "base_url") e.base_url = value.get<std::string>();
    else if (key == "model") e.model = value.get<std::string>();
    else if (key == "api_key_env") e.api_key_env = value.get<std::string>();
    else if (key == "timeout_s") e.timeout_s = value.get<int>();
    else throw Error(ErrorKind::kInputError, "config: unknown key services." + name + "." + key);
  }
  if (e.base_url.empty()) {
    throw Error(ErrorKind::kInputError, "config: services." + name + ".base_url is required");
  }
  return e;
}

Canvas canvas_from_json(const json& j, const std::string& name) {
  Canvas c{j.at("width_px").get<int>(), j.at("height_px").get<int>()};
  if (c.width_px < 1 || c.height_px < 1 || c.width_px > 16384 || c.height_px > 16384) {
    throw Error(ErrorKind::kInputError, "config: " + name + " must be between 1 and 16384 px");
  }
  return c;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

namespace {

const std::set<std::string> kConfigKeys = {
    "mock",          "services",      "font_dir",    "default_font",   "canvas",
    "image_size",    "token_budget",  "seed",        "max_retries",    "max_in_flight",
    "workers",       "wrap",          "num_exemplars", "exemplars_path", "cache",
    "cache_judge",   "cache_dir",     "min_area_px", "synth_limit",    "mock_fail_stage",
    "mock_judge_score"};

}  // namespace

PipelineConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::kInputError, "config must be a JSON object");
  PipelineConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (!kConfigKeys.count(key)) {
        throw Error(ErrorKind::kInputError, "config: unknown key \"" + key + "\"");
      }
      if (v.is_null()) continue;  // null keeps the default
      if (key == "mock") c.mock = v.get<bool>();
      else if (key == "services") {
        for (const auto& [name, s] : v.items()) {
          if (name == "text") c.text = endpoint_from_json(s, name);
          else if (name == "image") c.image = endpoint_from_json(s, name);
          else if (name == "multimodal") c.multimodal = endpoint_from_json(s, name);
          else if (name == "judge") c.judge = endpoint_from_json(s, name);
          else throw Error(ErrorKind::kInputError, "config: unknown service \"" + name + "\"");
        }
      } else if (key == "font_dir") c.font_dir = v.get<std::string>();
      else if (key == "default_font") c.default_font = v.get<std::string>();
      else if (key == "canvas") c.canvas = canvas_from_json(v, key);
      else if (key == "image_size") {
        const Canvas s = canvas_from_json(v, key);
        c.image_width_px = s.width_px;
        c.image_height_px = s.height_px;
      } else if (key == "token_budget") c.token_budget = v.get<size_t>();
      else if (key == "seed") c.seed = v.get<uint64_t>();
      else if (key == "max_retries") c.max_retries = v.get<int>();
      else if (key == "max_in_flight") c.max_in_flight = v.get<int>();
      else if (key == "workers") c.workers = v.get<size_t>();
      else if (key == "wrap") c.wrap = v.get<bool>();
      else if (key == "num_exemplars") c.num_exemplars = v.get<size_t>();
      else if (key == "exemplars_path") c.exemplars_path = v.get<std::string>();
      else if (key == "cache") c.cache = v.get<bool>();
      else if (key == "cache_judge") c.cache_judge = v.get<bool>();
      else if (key == "cache_dir") c.cache_dir = v.get<std::string>();
      else if (key == "min_area_px") c.min_area_px = v.get<int64_t>();
      else if (key == "synth_limit") c.synth_limit = v.get<size_t>();
      else if (key == "mock_fail_stage") c.mock_fail_stage = v.get<std::string>();
      else if (key == "mock_judge_score") c.mock_judge_score = v.get<double>();
      else throw Error(ErrorKind::kInputError, "config: unknown key \"" + key + "\"");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInputError, std::string("config: ") + e.what());
  }
  if (c.max_retries < 1) throw Error(ErrorKind::kInputError, "config: max_retries must be >= 1");
  if (c.max_in_flight < 1 || c.max_in_flight > 4096) {
    throw Error(ErrorKind::kInputError, "config: max_in_flight must be in [1, 4096]");
  }
  if (c.token_budget < 1) throw Error(ErrorKind::kInputError, "config: token_budget must be >= 1");
  static const std::set<std::string> stages = {"", "design_plan", "image", "typography"};
  if (!stages.count(c.mock_fail_stage)) {
    throw Error(ErrorKind::kInputError, "config: mock_fail_stage must be design_plan, image or "
                                        "typography");
  }
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::kInputError, path.string() + ": invalid JSON");
  PipelineConfig c = config_from_json(j);
  const fs::path base = path.parent_path();
  auto resolve = [&](fs::path& p, const char* key) {
    if (j.contains(key) && !p.empty() && p.is_relative()) p = base / p;
  };
  resolve(c.font_dir, "font_dir");
  resolve(c.exemplars_path, "exemplars_path");
  resolve(c.cache_dir, "cache_dir");
  return c;
}

fs::path bundled_exemplars_path() { return fs::path(DESIGNPIPE_DATA_DIR) / "exemplars.jsonl"; }

void validate_config(const PipelineConfig& config, Command command) {
  if (config.mock) return;
  auto need = [](const std::optional<HttpEndpoint>& e, const char* name) {
    if (!e) {
      throw Error(ErrorKind::kInputError,
                  std::string("live mode needs services.") + name + " in the config (or use --mock)");
    }
  };
  switch (command) {
    case Command::kGenerate:
      need(config.text, "text");
      need(config.image, "image");
      need(config.multimodal, "multimodal");
      break;
    case Command::kSynth:
      need(config.text, "text");
      need(config.multimodal, "multimodal");
      break;
    case Command::kEval: need(config.judge, "judge"); break;
    case Command::kRender: break;
  }
}

FontCatalog load_fonts(const PipelineConfig& config) {
  FontCatalog fonts;
  if (config.font_dir.empty()) {
    fonts = FontCatalog::builtin();
  } else {
    std::vector<std::string> skipped;
    fonts = FontCatalog::load_directory(config.font_dir, &skipped);
    for (const auto& s : skipped) std::fprintf(stderr, "warning: skipped font %s\n", s.c_str());
    if (fonts.empty()) {
      throw Error(ErrorKind::kInputError, "no usable fonts in " + config.font_dir.string());
    }
  }
  if (!config.default_font.empty()) {
    if (!fonts.contains(config.default_font)) {
      throw Error(ErrorKind::kInputError, "default_font \"" + config.default_font +
                                              "\" is not in the font catalog");
    }
    fonts.set_default_family(config.default_font);
  }
  return fonts;
}

Clients make_clients(const PipelineConfig& config, const FontCatalog& fonts) {
  Clients c;
  c.counter = std::make_shared<CallCounter>();
  if (config.mock) {
    TextResponder text = mock_text_responder();
    if (config.mock_fail_stage == "design_plan") {
      text = [](const std::string&, const SamplingParams&) { return std::string(kMockRefusal); };
    }
    MultimodalResponder typo = mock_typography_responder(fonts.default_family());
    if (config.mock_fail_stage == "typography") {
      typo = [](const RasterImage&, const std::string&, const SamplingParams&) {
        return std::string(kMockRefusal);
      };
    }
    c.text = std::make_shared<MockTextGenClient>(text, c.counter, ClientRole::kText);
    c.image = std::make_shared<MockImageGenClient>(c.counter, config.mock_fail_stage == "image");
    c.typography =
        std::make_shared<MockMultimodalClient>(typo, c.counter, ClientRole::kMultimodal);
    c.extractor = std::make_shared<MockMultimodalClient>(mock_extraction_responder(), c.counter,
                                                         ClientRole::kMultimodal);
    c.judge = std::make_shared<MockMultimodalClient>(mock_judge_responder(config.mock_judge_score),
                                                     c.counter, ClientRole::kJudge);
  } else {
    if (config.text) c.text = std::make_shared<HttpTextGenClient>(*config.text, c.counter);
    if (config.image) c.image = std::make_shared<HttpImageGenClient>(*config.image, c.counter);
    if (config.multimodal) {
      auto mm = std::make_shared<HttpMultimodalClient>(*config.multimodal, c.counter,
                                                       ClientRole::kMultimodal);
      c.typography = mm;
      c.extractor = mm;
    }
    if (config.judge) {
      c.judge = std::make_shared<HttpMultimodalClient>(*config.judge, c.counter, ClientRole::kJudge);
    }
  }

  auto limiter = std::make_shared<InFlightLimiter>(config.max_in_flight);
  if (c.text) c.text = with_limit(c.text, limiter);
  if (c.image) c.image = with_limit(c.image, limiter);
  if (c.typography) c.typography = with_limit(c.typography, limiter);
  if (c.extractor) c.extractor = c.extractor == c.typography ? c.typography
                                                             : with_limit(c.extractor, limiter);
  if (c.judge) c.judge = with_limit(c.judge, limiter);

  if (config.cache) {
    auto cache = std::make_shared<ResponseCache>(config.cache_dir);
    if (c.text) c.text = with_cache(c.text, cache, "text");
    if (c.image) c.image = with_cache(c.image, cache, "image");
    if (c.typography) c.typography = with_cache(c.typography, cache, "multimodal");
    if (c.extractor) c.extractor = with_cache(c.extractor, cache, "multimodal");
    if (c.judge && config.cache_judge) c.judge = with_cache(c.judge, cache, "judge");
  }
  return c;
}

json RunManifest::to_json() const {
  json s = json::array();
  for (const auto& st : stages) {
    s.push_back({{"stage", st.name},
                 {"artifact", st.artifact},
                 {"seconds", st.seconds},
                 {"attempts", st.attempts}});
  }
  json j = {{"intention", intention},
            {"seed", seed},
            {"mock", mock},
            {"canvas", {{"width_px", canvas.width_px}, {"height_px", canvas.height_px}}},
            {"stages", s},
            {"warnings", warnings},
            {"failed_stage", failed_stage ? json(*failed_stage) : json()},
            {"error", error.empty() ? json() : json(error)},
            {"error_kind", error_kind ? json(std::string(to_string(*error_kind))) : json()},
            {"client_calls", client_calls}};
  return j;
}

RunManifest cmd_generate(const std::string& intention_text, const PipelineConfig& config,
                         const fs::path& out_dir, const Clients& clients,
                         const FontCatalog& fonts, const std::vector<Exemplar>& store) {
  RunManifest m;
  m.intention = intention_text;
  m.seed = config.seed;
  m.mock = config.mock;
  m.canvas = config.canvas;
  fs::create_directories(out_dir);

  std::string stage = "design_plan";
  try {
    const Intention intention(intention_text);

    auto t0 = std::chrono::steady_clock::now();
    PlanGenerationOptions popt;
    popt.seed = config.seed;
    popt.max_retries = config.max_retries;
    popt.num_exemplars = config.num_exemplars;
    const Generated<DesignPlan> plan = generate_design_plan(*clients.text, intention, store, popt);
    write_file(out_dir / "plan.json", serialize_plan(plan.value));
    m.stages.push_back({stage, "plan.json", seconds_since(t0), plan.attempts});

    stage = "image";
    t0 = std::chrono::steady_clock::now();
    ImageGenOptions iopt;
    iopt.width_px = config.image_width_px;
    iopt.height_px = config.image_height_px;
    iopt.seed = config.seed;
    iopt.token_budget = config.token_budget;
    const RasterImage image =
        generate_design_image(*clients.image, plan.value, WordTokenCounter(), iopt);
    write_png(out_dir / "image.png", image);
    m.stages.push_back({stage, "image.png", seconds_since(t0), 1});

    stage = "typography";
    t0 = std::chrono::steady_clock::now();
    TypographyOptions topt;
    topt.seed = config.seed;
    topt.max_retries = config.max_retries;
    const Generated<RepairedSpec> typo = generate_typography(
        *clients.typography, plan.value, image, config.canvas, fonts, topt);
    write_file(out_dir / "typography.json", serialize_typography(typo.value.spec));
    m.warnings = typo.value.warnings;
    m.stages.push_back({stage, "typography.json", seconds_since(t0), typo.attempts});

    stage = "render";
    t0 = std::chrono::steady_clock::now();
    const RasterImage final_image =
        render_final(image, typo.value.spec, config.canvas, fonts, config.wrap);
    write_png(out_dir / "final.png", final_image);
    m.stages.push_back({stage, "final.png", seconds_since(t0), 1});
  } catch (const Error& e) {
    m.failed_stage = stage;
    m.error_kind = e.kind();
    m.error = e.what();
  } catch (const std::exception& e) {
    m.failed_stage = stage;
    m.error_kind = ErrorKind::kStageFailure;
    m.error = e.what();
  }
  m.client_calls = clients.counter ? clients.counter->to_json() : json::object();
  write_file(out_dir / "manifest.json", m.to_json().dump(2) + "\n");
  return m;
}

std::vector<RunManifest> cmd_generate_batch(const std::vector<std::string>& intentions,
                                            const PipelineConfig& config, const fs::path& out_dir,
                                            const Clients& clients, const FontCatalog& fonts,
                                            const std::vector<Exemplar>& store) {
  std::vector<RunManifest> out(intentions.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= intentions.size()) return;
      char name[16];
      std::snprintf(name, sizeof name, "%03zu", i);
      out[i] = cmd_generate(intentions[i], config, out_dir / name, clients, fonts, store);
    }
  };
  const size_t workers = std::max<size_t>(1, std::min(config.workers, intentions.size()));
  std::vector<std::thread> pool;
  for (size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

void cmd_render(const fs::path& image_path, const fs::path& typography_path, const Canvas& canvas,
                const PipelineConfig& config, const FontCatalog& fonts, const fs::path& out_png) {
  const RasterImage image = read_png(image_path);
  const std::string raw = read_file(typography_path);
  RepairedSpec spec;
  try {
    spec = parse_typography(raw, canvas, fonts);
  } catch (const Error& e) {
    throw Error(ErrorKind::kInputError,
                typography_path.string() + ": " + std::string(to_string(e.kind())) + ": " +
                    e.what(),
                e.detail());
  }
  for (const auto& w : spec.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  write_png(out_png, render_final(image, spec.spec, canvas, fonts, config.wrap));
}

std::vector<DesignDocument> load_corpus(const fs::path& documents_dir) {
  if (!fs::is_directory(documents_dir)) {
    throw Error(ErrorKind::kInputError, "no document directory " + documents_dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(documents_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<DesignDocument> docs;
  std::set<std::string> ids;
  for (const auto& f : files) {
    try {
      docs.push_back(parse_document(read_file(f)));
    } catch (const Error& e) {
      throw Error(e.kind(), f.string() + ": " + e.what(), e.detail());
    }
    if (!ids.insert(docs.back().id).second) {
      throw Error(ErrorKind::kInputError, f.string() + ": duplicate document id " + docs.back().id);
    }
  }
  return docs;
}

SynthesisReport cmd_synth(const fs::path& corpus_dir, const PipelineConfig& config,
                          const fs::path& out_dir, const Clients& clients,
                          const FontCatalog& fonts) {
  const auto corpus = load_corpus(corpus_dir / "documents");
  if (corpus.empty()) throw Error(ErrorKind::kInputError, "corpus is empty");
  const AssetResolver assets = directory_assets(corpus_dir / "assets");
  fs::create_directories(out_dir);
  ProgressJournal journal(out_dir / "journal.jsonl");

  SynthesisOptions opt;
  opt.seed = config.seed;
  opt.max_retries = config.max_retries;
  opt.workers = config.workers;
  opt.max_documents = config.synth_limit;
  opt.wrap = config.wrap;
  ExemplarStoreResult store = build_exemplar_store(corpus, *clients.extractor, *clients.text, assets,
                                                   fonts, journal, opt);

  std::string exemplar_lines;
  for (const auto& ex : store.exemplars) exemplar_lines += canonical_dump(exemplar_to_json(ex)) + "\n";
  write_file(out_dir / "exemplars.jsonl", exemplar_lines);

  std::string pair_lines;
  for (size_t i = 0; i < store.exemplars.size(); ++i) {
    const std::string& id = store.exemplar_doc_ids[i];
    const auto doc = std::find_if(corpus.begin(), corpus.end(),
                                  [&](const DesignDocument& d) { return d.id == id; });
    auto candidate =
        make_training_pair(*doc, store.exemplars[i].plan, assets, fonts, config.min_area_px);
    if (!candidate) {
      ++store.report.filtered;
      continue;
    }
    const std::string ref = "targets/" + id + ".png";
    write_png(out_dir / ref, candidate->target);
    pair_lines +=
        canonical_dump(training_pair_to_json({candidate->prompt_text, ref, candidate->source_doc_id})) +
        "\n";
    ++store.report.pairs;
  }
  write_file(out_dir / "pairs.jsonl", pair_lines);
  json report = store.report.to_json();
  report["client_calls"] = clients.counter ? clients.counter->to_json() : json::object();
  write_file(out_dir / "report.json", report.dump(2) + "\n");
  return store.report;
}

EvalReport cmd_eval(const fs::path& benchmark_path, const fs::path& images_dir,
                    const PipelineConfig& config, const fs::path& out_dir,
                    const Clients& clients) {
  const auto benchmark = load_benchmark(benchmark_path);
  ImageProvider images = [images_dir](const std::string& id) -> std::optional<RasterImage> {
    const fs::path p = images_dir / (id + ".png");
    if (!fs::exists(p)) return std::nullopt;
    return read_png(p);
  };
  EvalOptions opt;
  opt.seed = config.seed;
  opt.max_retries = config.max_retries;
  opt.workers = config.workers;
  EvalReport report = evaluate_run(*clients.judge, benchmark, images, opt);
  json j = report.to_json();
  j["client_calls"] = clients.counter ? clients.counter->to_json() : json::object();
  write_file(out_dir / "report.json", j.dump(2) + "\n");
  return report;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kBackendFailure: return 4;
    case ErrorKind::kGenerationExhausted:
    case ErrorKind::kStageFailure:
    case ErrorKind::kUnsatisfiable:
    case ErrorKind::kNoJsonFound:
    case ErrorKind::kInvalidPlan:
    case ErrorKind::kInvalidTypography:
    case ErrorKind::kInvalidScores:
    case ErrorKind::kMissingFragment: return 3;
    default: return 2;
  }
}

}  // namespace designpipe
