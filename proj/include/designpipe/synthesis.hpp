#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "designpipe/clients.hpp"
#include "designpipe/document.hpp"
#include "designpipe/font.hpp"
#include "designpipe/plan.hpp"
#include "designpipe/renderer.hpp"

namespace designpipe {

enum class PlanItem { kDescription, kKeywords, kCaptions, kHeadings };

std::string_view to_string(PlanItem item);

struct ExtractionItem {
  PlanItem kind;
  // May contain "{texts}", replaced by the document's text strings as JSON.
  std::string prompt_template;
};

// One template per plan item, in the fixed extraction order
// description, keywords, captions, headings.
const std::vector<ExtractionItem>& extraction_items();

std::string render_extraction_prompt(const ExtractionItem& item,
                                     const std::vector<std::string>& texts);

// Repaired sub-object for one item, e.g. {"keywords": ["red", "sale"]}.
struct PlanFragment {
  PlanItem kind;
  json value;
};

// Parses one item's reply against that item's sub-schema; throws
// kNoJsonFound or kInvalidPlan.
PlanFragment parse_plan_fragment(PlanItem kind, std::string_view raw);

PlanFragment extract_plan_item(MultimodalClient& client, const RasterImage& image,
                               const ExtractionItem& item, uint64_t seed, int max_retries,
                               const std::vector<std::string>& texts = {});

// Throws kMissingFragment naming the first absent kind.
DesignPlan merge_extractions(const std::vector<PlanFragment>& fragments);

std::string build_intention_prompt(const DocumentMetadata& meta,
                                   const std::vector<std::string>& texts);

// Cleans a model reply into an intention (quotes, labels, JSON wrapper);
// throws kInvalidPlan when nothing usable is left.
Intention parse_intention(std::string_view raw);

inline constexpr int64_t kMinTrainingAreaPx = 500'000;

struct TrainingCandidate {
  std::string prompt_text;
  std::string source_doc_id;
  RasterImage target;
};

struct TrainingPair {
  std::string prompt_text;
  std::string target_image_ref;
  std::string source_doc_id;
};

json training_pair_to_json(const TrainingPair& pair);

// nullopt when the canvas area is strictly below min_area_px; otherwise the
// text-free render of `doc` paired with the plan's image prompt.
std::optional<TrainingCandidate> make_training_pair(const DesignDocument& doc,
                                                    const DesignPlan& plan,
                                                    const AssetResolver& assets,
                                                    const FontCatalog& fonts,
                                                    int64_t min_area_px = kMinTrainingAreaPx);

// Append-only JSON-lines journal keyed by (doc_id, stage). A partial final
// line left by an interrupted run is discarded on open.
class ProgressJournal {
public:
  explicit ProgressJournal(std::filesystem::path path);

  std::optional<json> find(const std::string& doc_id, const std::string& stage) const;
  // Ignores keys that are already present.
  void append(const std::string& doc_id, const std::string& stage, const json& payload);

  size_t size() const;
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, json> entries_;
  std::ofstream out_;
};

struct SynthesisOptions {
  uint64_t seed = 0;
  int max_retries = 3;
  size_t workers = 1;
  // Process only the first N documents; the rest are left for a later run.
  std::optional<size_t> max_documents;
  bool wrap = true;
  double temperature = 0.7;
  int max_tokens = 1024;
};

struct SynthesisFailure {
  std::string doc_id;
  std::string stage;
  std::string error;
};

struct SynthesisReport {
  size_t documents = 0;
  size_t exemplars = 0;
  size_t journal_hits = 0;       // documents answered entirely from the journal
  size_t client_sequences = 0;   // documents that issued at least one client call
  size_t pending = 0;            // documents left unprocessed by max_documents
  std::vector<SynthesisFailure> failures;
  size_t pairs = 0;
  size_t filtered = 0;

  json to_json() const;
};

struct ExemplarStoreResult {
  std::vector<Exemplar> exemplars;
  std::vector<std::string> exemplar_doc_ids;  // parallel to exemplars
  SynthesisReport report;
};

// For each document: full preview render, four per-item extractions, merge,
// then an intention from the text service. Results are journaled per stage
// so an interrupted run resumes without repeating client calls.
ExemplarStoreResult build_exemplar_store(const std::vector<DesignDocument>& corpus,
                                         MultimodalClient& extractor, TextGenClient& text,
                                         const AssetResolver& assets, const FontCatalog& fonts,
                                         ProgressJournal& journal,
                                         const SynthesisOptions& options);

}  // namespace designpipe
