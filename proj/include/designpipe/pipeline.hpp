#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "designpipe/clients.hpp"
#include "designpipe/document.hpp"
#include "designpipe/error.hpp"
#include "designpipe/evaluation.hpp"
#include "designpipe/font.hpp"
#include "designpipe/plan.hpp"
#include "designpipe/synthesis.hpp"

namespace designpipe {

struct PipelineConfig {
  bool mock = false;
  std::optional<HttpEndpoint> text;
  std::optional<HttpEndpoint> image;
  std::optional<HttpEndpoint> multimodal;  // typography and plan extraction
  std::optional<HttpEndpoint> judge;

  std::filesystem::path font_dir;  // empty: builtin block face
  std::string default_font;        // empty: catalog default
  Canvas canvas{1024, 1024};
  int image_width_px = 1024;
  int image_height_px = 1024;
  size_t token_budget = 77;

  uint64_t seed = 0;
  int max_retries = 3;
  int max_in_flight = 4;
  size_t workers = 4;
  bool wrap = true;
  size_t num_exemplars = 5;
  std::filesystem::path exemplars_path;  // empty: bundled store

  bool cache = false;
  bool cache_judge = false;  // judge replies are only cached when asked for
  std::filesystem::path cache_dir = ".designpipe-cache";

  int64_t min_area_px = kMinTrainingAreaPx;
  std::optional<size_t> synth_limit;

  // Mock-mode knobs: force a stage to fail; make the judge constant.
  std::string mock_fail_stage;
  std::optional<double> mock_judge_score;
};

// Unknown keys are rejected so typos do not silently fall back to defaults.
PipelineConfig config_from_json(const json& j);
PipelineConfig load_config(const std::filesystem::path& path);

std::filesystem::path bundled_exemplars_path();

enum class Command { kGenerate, kRender, kSynth, kEval };

// Live mode needs the endpoints `command` talks to; throws kInputError.
void validate_config(const PipelineConfig& config, Command command);

struct Clients {
  std::shared_ptr<CallCounter> counter;
  std::shared_ptr<TextGenClient> text;
  std::shared_ptr<ImageGenClient> image;
  std::shared_ptr<MultimodalClient> typography;
  std::shared_ptr<MultimodalClient> extractor;
  std::shared_ptr<MultimodalClient> judge;
};

Clients make_clients(const PipelineConfig& config, const FontCatalog& fonts);

FontCatalog load_fonts(const PipelineConfig& config);

struct StageRecord {
  std::string name;
  std::string artifact;
  double seconds = 0.0;
  int attempts = 0;
};

struct RunManifest {
  std::string intention;
  uint64_t seed = 0;
  bool mock = false;
  Canvas canvas;
  std::vector<StageRecord> stages;
  std::vector<std::string> warnings;
  std::optional<std::string> failed_stage;
  std::optional<ErrorKind> error_kind;
  std::string error;
  json client_calls;

  bool ok() const { return !failed_stage.has_value(); }
  json to_json() const;
};

inline constexpr const char* kStageNames[] = {"design_plan", "image", "typography", "render"};

// Runs plan -> image -> typography -> render, writing plan.json, image.png,
// typography.json and final.png into out_dir, then manifest.json. A failing
// stage stops the run; its name and error go into the manifest.
RunManifest cmd_generate(const std::string& intention, const PipelineConfig& config,
                         const std::filesystem::path& out_dir, const Clients& clients,
                         const FontCatalog& fonts, const std::vector<Exemplar>& store);

// Batch form: item i goes to out_dir/NNN/. Items run in parallel.
std::vector<RunManifest> cmd_generate_batch(const std::vector<std::string>& intentions,
                                            const PipelineConfig& config,
                                            const std::filesystem::path& out_dir,
                                            const Clients& clients, const FontCatalog& fonts,
                                            const std::vector<Exemplar>& store);

void cmd_render(const std::filesystem::path& image_path,
                const std::filesystem::path& typography_path, const Canvas& canvas,
                const PipelineConfig& config, const FontCatalog& fonts,
                const std::filesystem::path& out_png);

// corpus_dir holds documents/*.json and assets/. Writes journal.jsonl,
// exemplars.jsonl, pairs.jsonl, targets/ and report.json into out_dir.
SynthesisReport cmd_synth(const std::filesystem::path& corpus_dir, const PipelineConfig& config,
                          const std::filesystem::path& out_dir, const Clients& clients,
                          const FontCatalog& fonts);

// Reads images_dir/<id>.png for each prompt; writes out_dir/report.json.
EvalReport cmd_eval(const std::filesystem::path& benchmark_path,
                    const std::filesystem::path& images_dir, const PipelineConfig& config,
                    const std::filesystem::path& out_dir, const Clients& clients);

// 2 input error, 3 stage failure, 4 backend failure.
int exit_code_for(ErrorKind kind);

std::vector<DesignDocument> load_corpus(const std::filesystem::path& documents_dir);

void write_file(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace designpipe
