#include "designpipe/synthesis.hpp"

#include <atomic>
#include <thread>

#include "designpipe/error.hpp"
#include "designpipe/image_gen.hpp"
#include "designpipe/text_util.hpp"

namespace designpipe {

std::string_view to_string(PlanItem item) {
  switch (item) {
    case PlanItem::kDescription: return "description";
    case PlanItem::kKeywords: return "keywords";
    case PlanItem::kCaptions: return "captions";
    case PlanItem::kHeadings: return "headings";
  }
  return "unknown";
}

const std::vector<ExtractionItem>& extraction_items() {
  static const std::vector<ExtractionItem> items = {
      {PlanItem::kDescription,
       "Look at this graphic design and describe it in one or two sentences: what it "
       "shows, its main objects and its setting.\n"
       "Reply with a JSON object of the form {\"description\": \"...\"} and nothing else."},
      {PlanItem::kKeywords,
       "List 3 to 8 short keywords for this graphic design covering its colors, objects "
       "and genre.\n"
       "Reply with a JSON object of the form {\"keywords\": [\"...\"]} and nothing else."},
      {PlanItem::kCaptions,
       "Describe the background of this graphic design (colors, textures and anything "
       "behind the main subject), then separately the main objects and where they sit. "
       "Do not mention any text printed on the design.\n"
       "Reply with a JSON object of the form "
       "{\"captions\": {\"background\": \"...\", \"objects\": \"...\"}} and nothing else."},
      {PlanItem::kHeadings,
       "The texts printed on this graphic design are listed below. Put the most prominent "
       "ones under heading and the rest under subheading, keeping their wording.\n"
       "Texts on the design: {texts}\n"
       "Reply with a JSON object of the form "
       "{\"headings\": {\"heading\": [\"...\"], \"subheading\": [\"...\"]}} and nothing else."},
  };
  return items;
}

std::string render_extraction_prompt(const ExtractionItem& item,
                                     const std::vector<std::string>& texts) {
  std::string out = item.prompt_template;
  const std::string placeholder = "{texts}";
  const size_t pos = out.find(placeholder);
  if (pos != std::string::npos) {
    out.replace(pos, placeholder.size(), json(texts).dump());
  }
  return out;
}

PlanFragment parse_plan_fragment(PlanItem kind, std::string_view raw) {
  const json object = extract_json_object(raw);
  const std::string key(to_string(kind));
  json value;
  if (object.contains(key)) {
    value = object.at(key);
  } else if (kind == PlanItem::kCaptions && object.contains("background")) {
    value = object;
  } else if (kind == PlanItem::kHeadings && object.contains("heading")) {
    value = object;
  } else {
    throw Error(ErrorKind::kInvalidPlan, "reply has no \"" + key + "\" field", key);
  }
  json out = json::object();
  switch (kind) {
    case PlanItem::kDescription: {
      std::string d = plan_fields::description(value);
      if (d.empty()) throw Error(ErrorKind::kInvalidPlan, "description is empty", key);
      out[key] = d;
      break;
    }
    case PlanItem::kKeywords: {
      auto k = plan_fields::keywords(value);
      if (k.empty()) throw Error(ErrorKind::kInvalidPlan, "keywords are empty", key);
      out[key] = k;
      break;
    }
    case PlanItem::kCaptions: {
      Captions c = plan_fields::captions(value);
      if (c.background.empty() || c.objects.empty()) {
        throw Error(ErrorKind::kInvalidPlan, "captions need background and objects", key);
      }
      out[key] = {{"background", c.background}, {"objects", c.objects}};
      break;
    }
    case PlanItem::kHeadings: {
      Headings h = plan_fields::headings(value);
      if (h.heading.empty()) throw Error(ErrorKind::kInvalidPlan, "heading is empty", key);
      out[key] = {{"heading", h.heading}, {"subheading", h.subheading}};
      break;
    }
  }
  return {kind, out};
}

PlanFragment extract_plan_item(MultimodalClient& client, const RasterImage& image,
                               const ExtractionItem& item, uint64_t seed, int max_retries,
                               const std::vector<std::string>& texts) {
  if (max_retries < 1) throw Error(ErrorKind::kInputError, "max_retries must be >= 1");
  const std::string prompt = render_extraction_prompt(item, texts);
  std::string last_error = "no attempts";
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    const std::string raw =
        client.complete(image, prompt, SamplingParams{0.7, seed + static_cast<uint64_t>(attempt), 512});
    try {
      return parse_plan_fragment(item.kind, raw);
    } catch (const Error& e) {
      if (!is_retryable(e.kind())) throw;
      last_error = std::string(to_string(e.kind())) + ": " + e.what();
    }
  }
  throw Error(ErrorKind::kGenerationExhausted,
              std::string(to_string(item.kind)) + " extraction failed after " +
                  std::to_string(max_retries) + " attempts; last error: " + last_error,
              last_error);
}

DesignPlan merge_extractions(const std::vector<PlanFragment>& fragments) {
  json merged = json::object();
  for (const auto& item : extraction_items()) {
    const std::string key(to_string(item.kind));
    const PlanFragment* found = nullptr;
    for (const auto& f : fragments) {
      if (f.kind == item.kind) found = &f;
    }
    if (found == nullptr || !found->value.contains(key)) {
      throw Error(ErrorKind::kMissingFragment, "no " + key + " fragment to merge", key);
    }
    merged[key] = found->value.at(key);
  }
  DesignPlan plan = plan_from_json(merged);
  const auto violations = plan_violations(plan);
  if (!violations.empty()) {
    throw Error(ErrorKind::kInvalidPlan, "merged plan is invalid: " + join(violations, ", "),
                violations.front());
  }
  return plan;
}

namespace {

const char* const kIntentionExamples[] = {
    "Design an Instagram post for a weekend farmers market with the headline \"Fresh "
    "Picks\" and the opening hours 8am to 1pm.",
    "I need a banner for my bakery's autumn sale announcing 20% off all pies.",
    "Create a poster for a jazz night at the Blue Room on Friday, March 8, with a moody, "
    "elegant look.",
};

std::string or_unknown(const std::string& s) {
  std::string t = trim(s);
  return t.empty() ? "unknown" : t;
}

}  // namespace

std::string build_intention_prompt(const DocumentMetadata& meta,
                                   const std::vector<std::string>& texts) {
  std::string out =
      "Write the short request a customer could have sent to a designer to get the graphic "
      "design described below. Use one to three sentences. Mention what the design is for "
      "and the important texts it must show. Do not describe the layout.\n\n"
      "Example requests:\n";
  for (const char* ex : kIntentionExamples) {
    out += "- ";
    out += ex;
    out += "\n";
  }
  out += "\nDesign information:\n";
  out += "title: " + or_unknown(meta.title) + "\n";
  out += "format: " + or_unknown(meta.format) + "\n";
  std::vector<std::string> kws;
  for (const auto& k : meta.keywords) {
    if (!trim(k).empty()) kws.push_back(trim(k));
  }
  out += "keywords: " + (kws.empty() ? std::string("unknown") : join(kws, ", ")) + "\n";
  std::vector<std::string> ts;
  for (const auto& t : texts) {
    if (!trim(t).empty()) ts.push_back(normalize_whitespace(t));
  }
  out += "texts: " + (ts.empty() ? std::string("unknown") : json(ts).dump()) + "\n";
  out += "\nRequest:";
  return out;
}

Intention parse_intention(std::string_view raw) {
  std::string text;
  if (auto obj = try_extract_json_object(raw)) {
    for (const char* key : {"intention", "request"}) {
      if (obj->contains(key) && obj->at(key).is_string()) {
        text = obj->at(key).get<std::string>();
        break;
      }
    }
  }
  if (text.empty()) text = std::string(raw);
  text = normalize_whitespace(text);
  for (const char* label : {"Request:", "Intention:", "request:", "intention:"}) {
    if (text.rfind(label, 0) == 0) text = trim(text.substr(std::string_view(label).size()));
  }
  while (text.size() >= 2 && (text.front() == '"' || text.front() == '\'') &&
         text.back() == text.front()) {
    text = trim(text.substr(1, text.size() - 2));
  }
  if (text.empty()) throw Error(ErrorKind::kInvalidPlan, "intention reply is empty", "intention");
  return Intention(text);
}

json training_pair_to_json(const TrainingPair& pair) {
  return {{"prompt_text", pair.prompt_text},
          {"target_image_ref", pair.target_image_ref},
          {"source_doc_id", pair.source_doc_id}};
}

std::optional<TrainingCandidate> make_training_pair(const DesignDocument& doc,
                                                    const DesignPlan& plan,
                                                    const AssetResolver& assets,
                                                    const FontCatalog& fonts,
                                                    int64_t min_area_px) {
  const int64_t area = static_cast<int64_t>(doc.canvas.width_px) * doc.canvas.height_px;
  if (area < min_area_px) return std::nullopt;
  TrainingCandidate out;
  out.prompt_text = assemble_image_prompt(plan);
  if (out.prompt_text.empty()) {
    throw Error(ErrorKind::kInvalidPlan, "plan yields an empty image prompt", "captions");
  }
  out.source_doc_id = doc.id;
  out.target = render_document(strip_text_layers(doc), assets, fonts, true);
  return out;
}

// ---- journal ---------------------------------------------------------------

ProgressJournal::ProgressJournal(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::string content;
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_, std::ios::binary);
    content.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  size_t keep = 0;
  size_t pos = 0;
  while (pos < content.size()) {
    const size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) break;  // partial last line
    const std::string line = content.substr(pos, nl - pos);
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("doc_id") || !j.contains("stage")) {
      break;  // anything after a corrupt line is untrusted
    }
    entries_.emplace(std::make_pair(j["doc_id"].get<std::string>(), j["stage"].get<std::string>()),
                     j.value("payload", json()));
    pos = nl + 1;
    keep = pos;
  }
  if (keep != content.size()) std::filesystem::resize_file(path_, keep);
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw Error(ErrorKind::kInputError, "cannot open journal " + path_.string());
}

std::optional<json> ProgressJournal::find(const std::string& doc_id,
                                          const std::string& stage) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find({doc_id, stage});
  if (it == entries_.end()) return std::nullopt;
  return std::optional<json>(std::in_place, it->second);
}

void ProgressJournal::append(const std::string& doc_id, const std::string& stage,
                             const json& payload) {
  std::lock_guard lock(mu_);
  if (!entries_.emplace(std::make_pair(doc_id, stage), payload).second) return;
  json line = {{"doc_id", doc_id}, {"stage", stage}, {"payload", payload}};
  out_ << line.dump() << '\n';
  out_.flush();
}

size_t ProgressJournal::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

// ---- store builder ---------------------------------------------------------

json SynthesisReport::to_json() const {
  json f = json::array();
  for (const auto& x : failures) {
    f.push_back({{"doc_id", x.doc_id}, {"stage", x.stage}, {"error", x.error}});
  }
  return {{"documents", documents},
          {"exemplars", exemplars},
          {"journal_hits", journal_hits},
          {"client_sequences", client_sequences},
          {"pending", pending},
          {"pairs", pairs},
          {"filtered", filtered},
          {"failures", f}};
}

namespace {

struct DocOutcome {
  enum class State { kPending, kOk, kFailed } state = State::kPending;
  std::optional<Exemplar> exemplar;
  SynthesisFailure failure;
  bool from_journal = false;
  bool issued_calls = false;
};

std::string item_stage(PlanItem kind) { return "extract." + std::string(to_string(kind)); }

DocOutcome fail(const std::string& doc_id, const std::string& stage, const std::string& error,
                ProgressJournal& journal) {
  DocOutcome out;
  out.state = DocOutcome::State::kFailed;
  out.failure = {doc_id, stage, error};
  journal.append(doc_id, "result", {{"status", "failed"}, {"stage", stage}, {"error", error}});
  return out;
}

DocOutcome process_document(const DesignDocument& doc, MultimodalClient& extractor,
                            TextGenClient& text, const AssetResolver& assets,
                            const FontCatalog& fonts, ProgressJournal& journal,
                            const SynthesisOptions& options) {
  if (auto done = journal.find(doc.id, "result")) {
    DocOutcome out;
    out.from_journal = true;
    if (done->value("status", "") == "ok") {
      out.state = DocOutcome::State::kOk;
      out.exemplar = exemplar_from_json(done->at("exemplar"));
    } else {
      out.state = DocOutcome::State::kFailed;
      out.failure = {doc.id, done->value("stage", ""), done->value("error", "")};
    }
    return out;
  }

  bool issued = false;
  const std::vector<std::string> texts = document_texts(doc);
  std::optional<RasterImage> preview;
  std::vector<PlanFragment> fragments;
  for (const auto& item : extraction_items()) {
    const std::string stage = item_stage(item.kind);
    if (auto hit = journal.find(doc.id, stage)) {
      fragments.push_back({item.kind, *hit});
      continue;
    }
    try {
      if (!preview) preview = render_document(doc, assets, fonts, options.wrap);
    } catch (const Error& e) {
      auto out = fail(doc.id, "preview", e.what(), journal);
      out.issued_calls = issued;
      return out;
    }
    try {
      issued = true;
      PlanFragment f =
          extract_plan_item(extractor, *preview, item, options.seed, options.max_retries, texts);
      journal.append(doc.id, stage, f.value);
      fragments.push_back(std::move(f));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kBackendFailure) throw;
      auto out = fail(doc.id, stage, e.what(), journal);
      out.issued_calls = true;
      return out;
    }
  }

  DesignPlan plan;
  try {
    plan = merge_extractions(fragments);
  } catch (const Error& e) {
    auto out = fail(doc.id, "merge", e.what(), journal);
    out.issued_calls = issued;
    return out;
  }

  std::optional<Intention> intention;
  if (auto hit = journal.find(doc.id, "intention")) {
    intention = Intention(hit->get<std::string>());
  } else {
    const std::string prompt = build_intention_prompt(doc.metadata, texts);
    std::string last_error = "no attempts";
    issued = true;
    for (int attempt = 0; attempt < options.max_retries && !intention; ++attempt) {
      const std::string raw = text.complete(
          prompt, SamplingParams{options.temperature, options.seed + static_cast<uint64_t>(attempt),
                                 options.max_tokens});
      try {
        intention = parse_intention(raw);
      } catch (const Error& e) {
        last_error = e.what();
      }
    }
    if (!intention) {
      auto out = fail(doc.id, "intention", "intention generation failed: " + last_error, journal);
      out.issued_calls = true;
      return out;
    }
    journal.append(doc.id, "intention", intention->text());
  }

  DocOutcome out;
  out.state = DocOutcome::State::kOk;
  out.exemplar = Exemplar{*intention, plan};
  out.issued_calls = issued;
  journal.append(doc.id, "result", {{"status", "ok"}, {"exemplar", exemplar_to_json(*out.exemplar)}});
  return out;
}

}  // namespace

ExemplarStoreResult build_exemplar_store(const std::vector<DesignDocument>& corpus,
                                         MultimodalClient& extractor, TextGenClient& text,
                                         const AssetResolver& assets, const FontCatalog& fonts,
                                         ProgressJournal& journal,
                                         const SynthesisOptions& options) {
  const size_t n = corpus.size();
  const size_t limit = options.max_documents ? std::min(*options.max_documents, n) : n;
  std::vector<DocOutcome> outcomes(n);
  std::atomic<size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mu;

  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= limit) return;
      try {
        outcomes[i] = process_document(corpus[i], extractor, text, assets, fonts, journal, options);
      } catch (...) {
        std::lock_guard lock(fatal_mu);
        if (!fatal) fatal = std::current_exception();
        next.store(limit);
        return;
      }
    }
  };
  const size_t workers = std::max<size_t>(1, std::min(options.workers, limit));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  ExemplarStoreResult result;
  result.report.documents = n;
  for (size_t i = 0; i < n; ++i) {
    const auto& o = outcomes[i];
    if (o.state == DocOutcome::State::kPending) {
      ++result.report.pending;
      continue;
    }
    if (o.from_journal) ++result.report.journal_hits;
    if (o.issued_calls) ++result.report.client_sequences;
    if (o.state == DocOutcome::State::kOk) {
      result.exemplars.push_back(*o.exemplar);
      result.exemplar_doc_ids.push_back(corpus[i].id);
    } else {
      result.report.failures.push_back(o.failure);
    }
  }
  result.report.exemplars = result.exemplars.size();
  return result;
}

}  // namespace designpipe
