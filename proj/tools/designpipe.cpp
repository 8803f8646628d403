#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "designpipe/error.hpp"
#include "designpipe/pipeline.hpp"
#include "designpipe/text_util.hpp"

namespace fs = std::filesystem;
using namespace designpipe;

namespace {

struct GlobalFlags {
  std::string config_path;
  bool mock = false;
  std::optional<uint64_t> seed;
  std::string out = "out";
  std::optional<bool> wrap;
  std::optional<int> max_in_flight;
  std::optional<int> retries;
  std::optional<size_t> workers;
  bool cache = false;
};

PipelineConfig resolve_config(const GlobalFlags& g) {
  PipelineConfig c = g.config_path.empty() ? PipelineConfig{} : load_config(g.config_path);
  if (g.mock) c.mock = true;
  if (g.seed) c.seed = *g.seed;
  if (g.wrap) c.wrap = *g.wrap;
  if (g.max_in_flight) c.max_in_flight = *g.max_in_flight;
  if (g.retries) c.max_retries = *g.retries;
  if (g.workers) c.workers = *g.workers;
  if (g.cache) c.cache = true;
  if (c.max_retries < 1) throw Error(ErrorKind::kInputError, "--retries must be >= 1");
  if (c.max_in_flight < 1 || c.max_in_flight > 4096) {
    throw Error(ErrorKind::kInputError, "--max-in-flight must be in [1, 4096]");
  }
  return c;
}

Canvas parse_canvas(const std::string& text) {
  int w = 0, h = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%dx%d%c", &w, &h, &tail) != 2 || w < 1 || h < 1) {
    throw Error(ErrorKind::kInputError, "--canvas must look like 1080x1350");
  }
  return {w, h};
}

int run_generate(const GlobalFlags& g, std::vector<std::string> intentions,
                 const std::string& intentions_file) {
  if (!intentions_file.empty()) {
    for (const auto& line : split(read_file(intentions_file), '\n')) {
      if (!trim(line).empty()) intentions.push_back(trim(line));
    }
  }
  if (intentions.empty()) throw Error(ErrorKind::kInputError, "no intention given");
  PipelineConfig config = resolve_config(g);
  validate_config(config, Command::kGenerate);
  const FontCatalog fonts = load_fonts(config);
  const auto store = load_exemplars(config.exemplars_path.empty() ? bundled_exemplars_path()
                                                                  : config.exemplars_path);
  const Clients clients = make_clients(config, fonts);
  std::vector<RunManifest> manifests;
  if (intentions.size() == 1) {
    manifests.push_back(cmd_generate(intentions[0], config, g.out, clients, fonts, store));
  } else {
    manifests = cmd_generate_batch(intentions, config, g.out, clients, fonts, store);
  }
  int code = 0;
  for (size_t i = 0; i < manifests.size(); ++i) {
    const auto& m = manifests[i];
    if (m.ok()) continue;
    std::fprintf(stderr, "error: item %zu failed at stage %s: %s\n", i, m.failed_stage->c_str(),
                 m.error.c_str());
    const int c = m.error_kind == ErrorKind::kBackendFailure ? 4 : 3;
    code = std::max(code, c);
  }
  std::printf("%zu of %zu designs written to %s\n",
              static_cast<size_t>(std::count_if(manifests.begin(), manifests.end(),
                                                [](const RunManifest& m) { return m.ok(); })),
              manifests.size(), g.out.c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Turns a short design request into a finished graphic design."};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_flag("--mock", g.mock, "Use the built-in deterministic backends");
  app.add_option("--seed", g.seed, "Sampling seed");
  app.add_option("--out", g.out, "Output directory (or file for render)");
  app.add_flag("--wrap,!--no-wrap", g.wrap, "Word-wrap text inside its box");
  app.add_option("--max-in-flight", g.max_in_flight, "Concurrent backend request cap");
  app.add_option("--retries", g.retries, "Attempts per model call");
  app.add_option("--workers", g.workers, "Parallel items in batch commands");
  app.add_flag("--cache", g.cache, "Cache backend responses on disk");

  auto* gen = app.add_subcommand("generate", "Generate designs from intentions");
  std::vector<std::string> intentions;
  std::string intentions_file;
  gen->add_option("intention", intentions, "Design request text");
  gen->add_option("--intentions-file", intentions_file, "One intention per line")
      ->check(CLI::ExistingFile);

  auto* render = app.add_subcommand("render", "Render typography over an image");
  std::string image_path, typography_path, canvas_text;
  render->add_option("--image", image_path, "Background PNG")->required()->check(CLI::ExistingFile);
  render->add_option("--typography", typography_path, "Typography JSON")
      ->required()
      ->check(CLI::ExistingFile);
  render->add_option("--canvas", canvas_text, "Canvas size WxH (default from config)");

  auto* synth = app.add_subcommand("synth", "Build an exemplar store from a design corpus");
  std::string corpus_dir;
  std::optional<size_t> limit;
  synth->add_option("--corpus", corpus_dir, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  synth->add_option("--limit", limit, "Stop after this many documents");

  auto* eval = app.add_subcommand("eval", "Score generated designs with a judge model");
  std::string benchmark_path, images_dir;
  eval->add_option("--benchmark", benchmark_path, "Benchmark JSON lines")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--images", images_dir, "Directory of <id>.png")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return run_generate(g, intentions, intentions_file);
    if (*render) {
      PipelineConfig config = resolve_config(g);
      const Canvas canvas = canvas_text.empty() ? config.canvas : parse_canvas(canvas_text);
      const FontCatalog fonts = load_fonts(config);
      fs::path out = g.out;
      if (out.extension() != ".png") out /= "final.png";
      cmd_render(image_path, typography_path, canvas, config, fonts, out);
      std::printf("wrote %s\n", out.string().c_str());
      return 0;
    }
    if (*synth) {
      PipelineConfig config = resolve_config(g);
      if (limit) config.synth_limit = *limit;
      validate_config(config, Command::kSynth);
      const FontCatalog fonts = load_fonts(config);
      const Clients clients = make_clients(config, fonts);
      const SynthesisReport r = cmd_synth(corpus_dir, config, g.out, clients, fonts);
      std::printf("%zu exemplars, %zu pairs, %zu filtered, %zu failed, %zu pending\n", r.exemplars,
                  r.pairs, r.filtered, r.failures.size(), r.pending);
      return 0;
    }
    if (*eval) {
      PipelineConfig config = resolve_config(g);
      validate_config(config, Command::kEval);
      const FontCatalog fonts = load_fonts(config);
      const Clients clients = make_clients(config, fonts);
      const EvalReport r = cmd_eval(benchmark_path, images_dir, config, g.out, clients);
      if (r.means) {
        std::printf("overall %s over %zu designs, %zu failures\n",
                    display_one_decimal(r.means->overall).c_str(), r.rows.size(),
                    r.failures.size());
      } else {
        std::printf("no design could be scored, %zu failures\n", r.failures.size());
      }
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", std::string(to_string(e.kind())).c_str(), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
