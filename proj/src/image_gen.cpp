#include "designpipe/image_gen.hpp"

#include "designpipe/error.hpp"
#include "designpipe/random.hpp"
#include "designpipe/text_util.hpp"

namespace designpipe {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string join_kept(const std::vector<std::string>& sentences, const std::vector<size_t>& kept) {
  std::string out;
  for (size_t i = 0; i < kept.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += sentences[kept[i]];
  }
  return out;
}

}  // namespace

size_t WordTokenCounter::count(std::string_view text) const {
  const size_t words = split_whitespace(text).size();
  return (words * 13 + 9) / 10;
}

std::string assemble_image_prompt(const DesignPlan& plan) {
  return normalize_whitespace(plan.captions.background + " " + plan.captions.objects);
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if ((c == '.' || c == '!' || c == '?') && i + 1 < text.size() && is_space(text[i + 1])) {
      if (auto s = trim(text.substr(start, i + 1 - start)); !s.empty()) out.push_back(std::move(s));
      start = i + 1;
    }
  }
  if (auto s = trim(text.substr(start)); !s.empty()) out.push_back(std::move(s));
  return out;
}

FitResult fit_prompt(std::string_view prompt, const TokenCounter& counter, size_t budget,
                     FitMode mode, uint64_t seed) {
  if (budget < 1) throw Error(ErrorKind::kInputError, "token budget must be at least 1");
  FitResult result;
  if (counter.count(prompt) <= budget) {
    result.chunks.emplace_back(prompt);
    return result;
  }
  const auto sentences = split_sentences(prompt);

  if (mode == FitMode::kChunk) {
    std::string current;
    for (size_t i = 0; i < sentences.size(); ++i) {
      const std::string& s = sentences[i];
      if (counter.count(s) > budget) {
        throw Error(ErrorKind::kUnsatisfiable,
                    "sentence " + std::to_string(i) + " alone exceeds the token budget of " +
                        std::to_string(budget),
                    std::to_string(i));
      }
      if (current.empty()) {
        current = s;
        continue;
      }
      std::string candidate = current + " " + s;
      if (counter.count(candidate) <= budget) {
        current = std::move(candidate);
      } else {
        result.chunks.push_back(std::move(current));
        current = s;
      }
    }
    if (!current.empty()) result.chunks.push_back(std::move(current));
    return result;
  }

  std::vector<size_t> kept(sentences.size());
  for (size_t i = 0; i < kept.size(); ++i) kept[i] = i;
  Rng rng(seed);
  std::string text = join_kept(sentences, kept);
  while (kept.size() > 1 && counter.count(text) > budget) {
    kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(uniform_below(rng, kept.size())));
    text = join_kept(sentences, kept);
  }
  if (counter.count(text) > budget) {
    const auto words = split_whitespace(text);
    std::string cut;
    for (const auto& w : words) {
      std::string next = cut.empty() ? w : cut + " " + w;
      if (counter.count(next) > budget) break;
      cut = std::move(next);
    }
    text = std::move(cut);
    result.truncated = true;
  }
  result.chunks.push_back(std::move(text));
  return result;
}

RasterImage generate_design_image(ImageGenClient& client, const DesignPlan& plan,
                                  const TokenCounter& counter, const ImageGenOptions& options) {
  if (options.width_px <= 0 || options.height_px <= 0) {
    throw Error(ErrorKind::kInputError, "image size must be positive");
  }
  const auto fit = fit_prompt(assemble_image_prompt(plan), counter, options.token_budget,
                              FitMode::kChunk, options.seed);
  RasterImage image;
  try {
    image = client.generate(fit.chunks, options.width_px, options.height_px, options.seed);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kBackendFailure) throw;
    throw Error(ErrorKind::kBackendFailure,
                "image generation (" + std::to_string(fit.chunks.size()) + " chunks, " +
                    std::to_string(options.width_px) + "x" + std::to_string(options.height_px) +
                    ", seed " + std::to_string(options.seed) + "): " + e.what(),
                e.detail());
  }
  if (image.width() != options.width_px || image.height() != options.height_px) {
    throw Error(ErrorKind::kBackendFailure,
                "image backend returned " + std::to_string(image.width()) + "x" +
                    std::to_string(image.height()) + ", requested " +
                    std::to_string(options.width_px) + "x" + std::to_string(options.height_px));
  }
  return image;
}

}  // namespace designpipe
