#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <vector>

#include "designpipe/json_util.hpp"
#include "designpipe/raster.hpp"

namespace designpipe {

struct SamplingParams {
  double temperature = 0.7;
  uint64_t seed = 0;
  int max_tokens = 1024;
};

class TextGenClient {
public:
  virtual ~TextGenClient() = default;
  virtual std::string complete(const std::string& prompt, const SamplingParams& sampling) = 0;
};

class ImageGenClient {
public:
  virtual ~ImageGenClient() = default;
  virtual RasterImage generate(const std::vector<std::string>& prompt_chunks, int width_px,
                               int height_px, uint64_t seed) = 0;
};

class MultimodalClient {
public:
  virtual ~MultimodalClient() = default;
  virtual std::string complete(const RasterImage& image, const std::string& prompt,
                               const SamplingParams& sampling) = 0;
};

enum class ClientRole { kText, kImage, kMultimodal, kJudge };

// Per-role call counts plus the number of network requests actually issued.
struct CallCounter {
  std::atomic<int64_t> text{0};
  std::atomic<int64_t> image{0};
  std::atomic<int64_t> multimodal{0};
  std::atomic<int64_t> judge{0};
  std::atomic<int64_t> network{0};

  void record(ClientRole role);
  json to_json() const;
};

// ---- mock backends -------------------------------------------------------

using TextResponder = std::function<std::string(const std::string&, const SamplingParams&)>;
using MultimodalResponder =
    std::function<std::string(const RasterImage&, const std::string&, const SamplingParams&)>;

class MockTextGenClient final : public TextGenClient {
public:
  explicit MockTextGenClient(TextResponder responder,
                             std::shared_ptr<CallCounter> counter = nullptr,
                             ClientRole role = ClientRole::kText)
      : responder_(std::move(responder)), counter_(std::move(counter)), role_(role) {}

  std::string complete(const std::string& prompt, const SamplingParams& sampling) override;
  int64_t calls() const { return calls_.load(); }

private:
  TextResponder responder_;
  std::shared_ptr<CallCounter> counter_;
  ClientRole role_;
  std::atomic<int64_t> calls_{0};
};

class MockMultimodalClient final : public MultimodalClient {
public:
  explicit MockMultimodalClient(MultimodalResponder responder,
                                std::shared_ptr<CallCounter> counter = nullptr,
                                ClientRole role = ClientRole::kMultimodal)
      : responder_(std::move(responder)), counter_(std::move(counter)), role_(role) {}

  std::string complete(const RasterImage& image, const std::string& prompt,
                       const SamplingParams& sampling) override;
  int64_t calls() const { return calls_.load(); }

private:
  MultimodalResponder responder_;
  std::shared_ptr<CallCounter> counter_;
  ClientRole role_;
  std::atomic<int64_t> calls_{0};
};

struct ImageRequest {
  std::vector<std::string> prompt_chunks;
  int width_px = 0;
  int height_px = 0;
  uint64_t seed = 0;
};

// Procedural stand-in for a text-to-image service: a solid background whose
// color comes from the prompt hash, a lighter blank panel across the upper
// third (room for text), and a disc in the lower half. Every request is logged.
class MockImageGenClient final : public ImageGenClient {
public:
  explicit MockImageGenClient(std::shared_ptr<CallCounter> counter = nullptr, bool fail = false)
      : counter_(std::move(counter)), fail_(fail) {}

  RasterImage generate(const std::vector<std::string>& prompt_chunks, int width_px, int height_px,
                       uint64_t seed) override;

  std::vector<ImageRequest> requests() const;

private:
  std::shared_ptr<CallCounter> counter_;
  bool fail_;
  mutable std::mutex mu_;
  std::vector<ImageRequest> log_;
};

// The blank panel drawn by MockImageGenClient, as canvas fractions.
struct PanelRegion {
  double left = 0.08;
  double top = 0.05;
  double right = 0.92;
  double bottom = 0.30;
};
inline constexpr PanelRegion kMockPanel{};

// ---- middleware ----------------------------------------------------------

// Caps concurrent in-flight requests across every client sharing it.
class InFlightLimiter {
public:
  explicit InFlightLimiter(int max_in_flight);

  class Permit {
  public:
    explicit Permit(InFlightLimiter& limiter) : limiter_(limiter) { limiter_.sem_.acquire(); }
    ~Permit() { limiter_.sem_.release(); }
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;

  private:
    InFlightLimiter& limiter_;
  };

  int max_in_flight() const { return max_; }

private:
  int max_;
  std::counting_semaphore<4096> sem_;
};

// On-disk response cache keyed by (client kind, request hash). Writes go
// through a temp file and rename; concurrent writers are serialized.
class ResponseCache {
public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> get(std::string_view kind, std::string_view request_key) const;
  void put(std::string_view kind, std::string_view request_key, std::string_view value);

private:
  std::filesystem::path path_for(std::string_view kind, std::string_view request_key) const;

  std::filesystem::path dir_;
  std::mutex mu_;
};

std::shared_ptr<TextGenClient> with_limit(std::shared_ptr<TextGenClient> inner,
                                          std::shared_ptr<InFlightLimiter> limiter);
std::shared_ptr<ImageGenClient> with_limit(std::shared_ptr<ImageGenClient> inner,
                                           std::shared_ptr<InFlightLimiter> limiter);
std::shared_ptr<MultimodalClient> with_limit(std::shared_ptr<MultimodalClient> inner,
                                             std::shared_ptr<InFlightLimiter> limiter);

std::shared_ptr<TextGenClient> with_cache(std::shared_ptr<TextGenClient> inner,
                                          std::shared_ptr<ResponseCache> cache,
                                          std::string kind);
std::shared_ptr<ImageGenClient> with_cache(std::shared_ptr<ImageGenClient> inner,
                                           std::shared_ptr<ResponseCache> cache,
                                           std::string kind);
std::shared_ptr<MultimodalClient> with_cache(std::shared_ptr<MultimodalClient> inner,
                                             std::shared_ptr<ResponseCache> cache,
                                             std::string kind);

// ---- HTTP backends -------------------------------------------------------

struct HttpEndpoint {
  std::string base_url;     // e.g. "https://api.openai.com/v1"
  std::string model;
  std::string api_key_env;  // name of the environment variable holding the token
  int timeout_s = 120;
};

// Chat-completions style text service: POST {base_url}/chat/completions.
class HttpTextGenClient final : public TextGenClient {
public:
  HttpTextGenClient(HttpEndpoint endpoint, std::shared_ptr<CallCounter> counter);
  std::string complete(const std::string& prompt, const SamplingParams& sampling) override;

private:
  HttpEndpoint endpoint_;
  std::shared_ptr<CallCounter> counter_;
};

// Chat-completions with an image part: the PNG travels as a base64 data URL.
class HttpMultimodalClient final : public MultimodalClient {
public:
  HttpMultimodalClient(HttpEndpoint endpoint, std::shared_ptr<CallCounter> counter,
                       ClientRole role = ClientRole::kMultimodal);
  std::string complete(const RasterImage& image, const std::string& prompt,
                       const SamplingParams& sampling) override;

private:
  HttpEndpoint endpoint_;
  std::shared_ptr<CallCounter> counter_;
  ClientRole role_;
};

// POST {base_url} with {"model","prompt_chunks","width","height","seed"};
// the response body is PNG bytes, or JSON {"png_base64": "..."}.
class HttpImageGenClient final : public ImageGenClient {
public:
  HttpImageGenClient(HttpEndpoint endpoint, std::shared_ptr<CallCounter> counter);
  RasterImage generate(const std::vector<std::string>& prompt_chunks, int width_px, int height_px,
                       uint64_t seed) override;

private:
  HttpEndpoint endpoint_;
  std::shared_ptr<CallCounter> counter_;
};

// Request bodies, exposed for wire-format tests.
json chat_request_body(const std::string& model, const std::string& prompt,
                       const SamplingParams& sampling, const RasterImage* image);
std::string chat_response_text(const json& response);
json image_request_body(const std::string& model, const std::vector<std::string>& chunks,
                        int width_px, int height_px, uint64_t seed);

}  // namespace designpipe
