#include "designpipe/clients.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

#include "designpipe/digest.hpp"
#include "designpipe/error.hpp"
#include "designpipe/text_util.hpp"

namespace designpipe {

void CallCounter::record(ClientRole role) {
  switch (role) {
    case ClientRole::kText: ++text; break;
    case ClientRole::kImage: ++image; break;
    case ClientRole::kMultimodal: ++multimodal; break;
    case ClientRole::kJudge: ++judge; break;
  }
}

json CallCounter::to_json() const {
  return json{{"text", text.load()},
              {"image", image.load()},
              {"multimodal", multimodal.load()},
              {"judge", judge.load()},
              {"network", network.load()}};
}

std::string MockTextGenClient::complete(const std::string& prompt,
                                        const SamplingParams& sampling) {
  ++calls_;
  if (counter_) counter_->record(role_);
  return responder_(prompt, sampling);
}

std::string MockMultimodalClient::complete(const RasterImage& image, const std::string& prompt,
                                           const SamplingParams& sampling) {
  ++calls_;
  if (counter_) counter_->record(role_);
  return responder_(image, prompt, sampling);
}

RasterImage MockImageGenClient::generate(const std::vector<std::string>& prompt_chunks,
                                         int width_px, int height_px, uint64_t seed) {
  if (counter_) counter_->record(ClientRole::kImage);
  {
    std::lock_guard lock(mu_);
    log_.push_back({prompt_chunks, width_px, height_px, seed});
  }
  if (fail_) throw Error(ErrorKind::kBackendFailure, "mock image backend configured to fail");
  if (width_px <= 0 || height_px <= 0) {
    throw Error(ErrorKind::kBackendFailure, "image size must be positive");
  }
  // The mock concatenates chunks, standing in for embedding-level merging.
  const uint64_t h = hash64(join(prompt_chunks, " ") + "|" + std::to_string(seed));
  const uint8_t bg[3] = {static_cast<uint8_t>(40 + h % 176),
                         static_cast<uint8_t>(40 + (h >> 8) % 176),
                         static_cast<uint8_t>(40 + (h >> 16) % 176)};
  uint8_t panel[3];
  uint8_t disc[3];
  for (int c = 0; c < 3; ++c) {
    panel[c] = static_cast<uint8_t>(bg[c] + (255 - bg[c]) * 3 / 4);
    disc[c] = static_cast<uint8_t>((255 - bg[c]) * 4 / 5);
  }
  RasterImage img(width_px, height_px, std::array<uint8_t, 4>{bg[0], bg[1], bg[2], 255});
  const int px0 = static_cast<int>(kMockPanel.left * width_px);
  const int px1 = static_cast<int>(kMockPanel.right * width_px);
  const int py0 = static_cast<int>(kMockPanel.top * height_px);
  const int py1 = static_cast<int>(kMockPanel.bottom * height_px);
  const double cx = width_px / 2.0;
  const double cy = height_px * 0.68;
  const double r = 0.16 * std::min(width_px, height_px);
  for (int y = 0; y < height_px; ++y) {
    for (int x = 0; x < width_px; ++x) {
      uint8_t* p = img.at(x, y);
      const uint8_t* color = nullptr;
      if (x >= px0 && x < px1 && y >= py0 && y < py1) {
        color = panel;
      } else {
        const double dx = x + 0.5 - cx;
        const double dy = y + 0.5 - cy;
        if (dx * dx + dy * dy <= r * r) color = disc;
      }
      if (color != nullptr) {
        p[0] = color[0];
        p[1] = color[1];
        p[2] = color[2];
      }
    }
  }
  return img;
}

std::vector<ImageRequest> MockImageGenClient::requests() const {
  std::lock_guard lock(mu_);
  return log_;
}

InFlightLimiter::InFlightLimiter(int max_in_flight)
    : max_(std::clamp(max_in_flight, 1, 4096)), sem_(max_) {}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::path_for(std::string_view kind,
                                              std::string_view request_key) const {
  return dir_ / std::string(kind) / sha256_hex(request_key);
}

std::optional<std::string> ResponseCache::get(std::string_view kind,
                                              std::string_view request_key) const {
  std::ifstream in(path_for(kind, request_key), std::ios::binary);
  if (!in) return std::nullopt;
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void ResponseCache::put(std::string_view kind, std::string_view request_key,
                        std::string_view value) {
  std::lock_guard lock(mu_);
  const auto path = path_for(kind, request_key);
  std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(value.data(), static_cast<std::streamsize>(value.size()));
  }
  std::filesystem::rename(tmp, path);
}

namespace {

std::string image_key(const RasterImage& image) {
  return std::to_string(image.width()) + "x" + std::to_string(image.height()) + ":" +
         sha256_hex(image.pixels());
}

json sampling_json(const SamplingParams& s) {
  return json{{"temperature", s.temperature}, {"seed", s.seed}, {"max_tokens", s.max_tokens}};
}

class LimitedText final : public TextGenClient {
public:
  LimitedText(std::shared_ptr<TextGenClient> inner, std::shared_ptr<InFlightLimiter> limiter)
      : inner_(std::move(inner)), limiter_(std::move(limiter)) {}
  std::string complete(const std::string& prompt, const SamplingParams& sampling) override {
    InFlightLimiter::Permit permit(*limiter_);
    return inner_->complete(prompt, sampling);
  }

private:
  std::shared_ptr<TextGenClient> inner_;
  std::shared_ptr<InFlightLimiter> limiter_;
};

class LimitedImage final : public ImageGenClient {
public:
  LimitedImage(std::shared_ptr<ImageGenClient> inner, std::shared_ptr<InFlightLimiter> limiter)
      : inner_(std::move(inner)), limiter_(std::move(limiter)) {}
  RasterImage generate(const std::vector<std::string>& chunks, int w, int h,
                       uint64_t seed) override {
    InFlightLimiter::Permit permit(*limiter_);
    return inner_->generate(chunks, w, h, seed);
  }

private:
  std::shared_ptr<ImageGenClient> inner_;
  std::shared_ptr<InFlightLimiter> limiter_;
};

class LimitedMultimodal final : public MultimodalClient {
public:
  LimitedMultimodal(std::shared_ptr<MultimodalClient> inner,
                    std::shared_ptr<InFlightLimiter> limiter)
      : inner_(std::move(inner)), limiter_(std::move(limiter)) {}
  std::string complete(const RasterImage& image, const std::string& prompt,
                       const SamplingParams& sampling) override {
    InFlightLimiter::Permit permit(*limiter_);
    return inner_->complete(image, prompt, sampling);
  }

private:
  std::shared_ptr<MultimodalClient> inner_;
  std::shared_ptr<InFlightLimiter> limiter_;
};

class CachedText final : public TextGenClient {
public:
  CachedText(std::shared_ptr<TextGenClient> inner, std::shared_ptr<ResponseCache> cache,
             std::string kind)
      : inner_(std::move(inner)), cache_(std::move(cache)), kind_(std::move(kind)) {}
  std::string complete(const std::string& prompt, const SamplingParams& sampling) override {
    const std::string key = json{{"prompt", prompt}, {"sampling", sampling_json(sampling)}}.dump();
    if (auto hit = cache_->get(kind_, key)) return *hit;
    std::string value = inner_->complete(prompt, sampling);
    cache_->put(kind_, key, value);
    return value;
  }

private:
  std::shared_ptr<TextGenClient> inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::string kind_;
};

class CachedImage final : public ImageGenClient {
public:
  CachedImage(std::shared_ptr<ImageGenClient> inner, std::shared_ptr<ResponseCache> cache,
              std::string kind)
      : inner_(std::move(inner)), cache_(std::move(cache)), kind_(std::move(kind)) {}
  RasterImage generate(const std::vector<std::string>& chunks, int w, int h,
                       uint64_t seed) override {
    const std::string key =
        json{{"chunks", chunks}, {"width", w}, {"height", h}, {"seed", seed}}.dump();
    if (auto hit = cache_->get(kind_, key)) {
      return decode_png(std::span(reinterpret_cast<const uint8_t*>(hit->data()), hit->size()));
    }
    RasterImage image = inner_->generate(chunks, w, h, seed);
    const auto png = encode_png(image);
    cache_->put(kind_, key, std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
    return image;
  }

private:
  std::shared_ptr<ImageGenClient> inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::string kind_;
};

class CachedMultimodal final : public MultimodalClient {
public:
  CachedMultimodal(std::shared_ptr<MultimodalClient> inner, std::shared_ptr<ResponseCache> cache,
                   std::string kind)
      : inner_(std::move(inner)), cache_(std::move(cache)), kind_(std::move(kind)) {}
  std::string complete(const RasterImage& image, const std::string& prompt,
                       const SamplingParams& sampling) override {
    const std::string key = json{{"image", image_key(image)},
                                 {"prompt", prompt},
                                 {"sampling", sampling_json(sampling)}}
                                .dump();
    if (auto hit = cache_->get(kind_, key)) return *hit;
    std::string value = inner_->complete(image, prompt, sampling);
    cache_->put(kind_, key, value);
    return value;
  }

private:
  std::shared_ptr<MultimodalClient> inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::string kind_;
};

}  // namespace

std::shared_ptr<TextGenClient> with_limit(std::shared_ptr<TextGenClient> inner,
                                          std::shared_ptr<InFlightLimiter> limiter) {
  return std::make_shared<LimitedText>(std::move(inner), std::move(limiter));
}
std::shared_ptr<ImageGenClient> with_limit(std::shared_ptr<ImageGenClient> inner,
                                           std::shared_ptr<InFlightLimiter> limiter) {
  return std::make_shared<LimitedImage>(std::move(inner), std::move(limiter));
}
std::shared_ptr<MultimodalClient> with_limit(std::shared_ptr<MultimodalClient> inner,
                                             std::shared_ptr<InFlightLimiter> limiter) {
  return std::make_shared<LimitedMultimodal>(std::move(inner), std::move(limiter));
}

std::shared_ptr<TextGenClient> with_cache(std::shared_ptr<TextGenClient> inner,
                                          std::shared_ptr<ResponseCache> cache,
                                          std::string kind) {
  return std::make_shared<CachedText>(std::move(inner), std::move(cache), std::move(kind));
}
std::shared_ptr<ImageGenClient> with_cache(std::shared_ptr<ImageGenClient> inner,
                                           std::shared_ptr<ResponseCache> cache,
                                           std::string kind) {
  return std::make_shared<CachedImage>(std::move(inner), std::move(cache), std::move(kind));
}
std::shared_ptr<MultimodalClient> with_cache(std::shared_ptr<MultimodalClient> inner,
                                             std::shared_ptr<ResponseCache> cache,
                                             std::string kind) {
  return std::make_shared<CachedMultimodal>(std::move(inner), std::move(cache), std::move(kind));
}

json chat_request_body(const std::string& model, const std::string& prompt,
                       const SamplingParams& sampling, const RasterImage* image) {
  json content;
  if (image == nullptr) {
    content = prompt;
  } else {
    const auto png = encode_png(*image);
    content = json::array({json{{"type", "text"}, {"text", prompt}},
                           json{{"type", "image_url"},
                                {"image_url", {{"url", "data:image/png;base64," + base64_encode(png)}}}}});
  }
  return json{{"model", model},
              {"messages", json::array({json{{"role", "user"}, {"content", std::move(content)}}})},
              {"temperature", sampling.temperature},
              {"seed", sampling.seed},
              {"max_tokens", sampling.max_tokens}};
}

std::string chat_response_text(const json& response) {
  try {
    const json& content = response.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    // Some servers return content as a list of typed parts.
    std::string out;
    for (const auto& part : content) {
      if (part.value("type", "") == "text") out += part.value("text", "");
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kBackendFailure,
                std::string("unexpected chat-completions response: ") + e.what());
  }
}

json image_request_body(const std::string& model, const std::vector<std::string>& chunks,
                        int width_px, int height_px, uint64_t seed) {
  return json{{"model", model},
              {"prompt_chunks", chunks},
              {"width", width_px},
              {"height", height_px},
              {"seed", seed}};
}

}  // namespace designpipe
