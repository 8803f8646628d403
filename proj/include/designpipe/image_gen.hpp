#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "designpipe/clients.hpp"
#include "designpipe/plan.hpp"
#include "designpipe/raster.hpp"

namespace designpipe {

class TokenCounter {
public:
  virtual ~TokenCounter() = default;
  // count("") == 0 and count(a + b) >= max(count(a), count(b)).
  virtual size_t count(std::string_view text) const = 0;
};

// Conservative stand-in for a real tokenizer: ceil(1.3 x whitespace words).
// Deployments plug in their backend's tokenizer instead.
class WordTokenCounter final : public TokenCounter {
public:
  size_t count(std::string_view text) const override;
};

inline constexpr size_t kDefaultTokenBudget = 77;

// Background caption, one space, objects caption; whitespace collapsed.
std::string assemble_image_prompt(const DesignPlan& plan);

// Splits after '.', '!' or '?' when followed by whitespace. Sentences keep
// their delimiter and are trimmed; a trailing fragment counts as a sentence.
std::vector<std::string> split_sentences(std::string_view text);

enum class FitMode { kChunk, kDrop };

struct FitResult {
  std::vector<std::string> chunks;
  bool truncated = false;  // drop mode had to cut a lone sentence by words
};

// kChunk: greedy left-to-right packing of whole sentences into the fewest
// chunks within budget; throws kUnsatisfiable if one sentence alone exceeds it.
// kDrop: removes uniformly chosen sentences (seeded) until the rest fits,
// keeping order; returns a single chunk.
// A prompt that already fits is returned unchanged in either mode.
FitResult fit_prompt(std::string_view prompt, const TokenCounter& counter, size_t budget,
                     FitMode mode, uint64_t seed = 0);

struct ImageGenOptions {
  int width_px = 1024;
  int height_px = 1024;
  uint64_t seed = 0;
  size_t token_budget = kDefaultTokenBudget;
};

RasterImage generate_design_image(ImageGenClient& client, const DesignPlan& plan,
                                  const TokenCounter& counter, const ImageGenOptions& options);

}  // namespace designpipe
