#include <httplib.h>

#include <cstdlib>

#include "designpipe/clients.hpp"
#include "designpipe/digest.hpp"
#include "designpipe/error.hpp"

namespace designpipe {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::kInputError, "endpoint URL needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? std::string() : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

httplib::Headers auth_headers(const HttpEndpoint& endpoint) {
  httplib::Headers headers;
  if (!endpoint.api_key_env.empty()) {
    if (const char* token = std::getenv(endpoint.api_key_env.c_str()); token != nullptr && *token) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }
  return headers;
}

httplib::Result post(const HttpEndpoint& endpoint, const std::string& path_suffix,
                     const std::string& body, CallCounter* counter) {
  const SplitUrl url = split_url(endpoint.base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(endpoint.timeout_s, 0);
  client.set_read_timeout(endpoint.timeout_s, 0);
  client.set_write_timeout(endpoint.timeout_s, 0);
  if (counter != nullptr) ++counter->network;
  auto result = client.Post(url.path + path_suffix, auth_headers(endpoint), body, "application/json");
  const std::string where = endpoint.base_url + path_suffix;
  if (!result) {
    throw Error(ErrorKind::kBackendFailure,
                "request to " + where + " failed: " + httplib::to_string(result.error()), where);
  }
  if (result->status < 200 || result->status >= 300) {
    throw Error(ErrorKind::kBackendFailure,
                "request to " + where + " returned HTTP " + std::to_string(result->status) + ": " +
                    result->body.substr(0, 300),
                where);
  }
  return result;
}

std::string complete_chat(const HttpEndpoint& endpoint, const std::string& prompt,
                          const SamplingParams& sampling, const RasterImage* image,
                          CallCounter* counter) {
  const json body = chat_request_body(endpoint.model, prompt, sampling, image);
  auto result = post(endpoint, "/chat/completions", body.dump(), counter);
  const json response = json::parse(result->body, nullptr, false);
  if (response.is_discarded()) {
    throw Error(ErrorKind::kBackendFailure, "chat-completions response is not JSON",
                endpoint.base_url);
  }
  return chat_response_text(response);
}

}  // namespace

HttpTextGenClient::HttpTextGenClient(HttpEndpoint endpoint, std::shared_ptr<CallCounter> counter)
    : endpoint_(std::move(endpoint)), counter_(std::move(counter)) {}

std::string HttpTextGenClient::complete(const std::string& prompt, const SamplingParams& sampling) {
  if (counter_) counter_->record(ClientRole::kText);
  return complete_chat(endpoint_, prompt, sampling, nullptr, counter_.get());
}

HttpMultimodalClient::HttpMultimodalClient(HttpEndpoint endpoint,
                                           std::shared_ptr<CallCounter> counter, ClientRole role)
    : endpoint_(std::move(endpoint)), counter_(std::move(counter)), role_(role) {}

std::string HttpMultimodalClient::complete(const RasterImage& image, const std::string& prompt,
                                           const SamplingParams& sampling) {
  if (counter_) counter_->record(role_);
  return complete_chat(endpoint_, prompt, sampling, &image, counter_.get());
}

HttpImageGenClient::HttpImageGenClient(HttpEndpoint endpoint, std::shared_ptr<CallCounter> counter)
    : endpoint_(std::move(endpoint)), counter_(std::move(counter)) {}

RasterImage HttpImageGenClient::generate(const std::vector<std::string>& prompt_chunks,
                                         int width_px, int height_px, uint64_t seed) {
  if (counter_) counter_->record(ClientRole::kImage);
  const json body = image_request_body(endpoint_.model, prompt_chunks, width_px, height_px, seed);
  auto result = post(endpoint_, "", body.dump(), counter_.get());
  const std::string& payload = result->body;
  try {
    if (!payload.empty() && payload.front() == '{') {
      const json j = json::parse(payload);
      const auto png = base64_decode(j.at("png_base64").get<std::string>());
      return decode_png(png);
    }
    return decode_png(std::span(reinterpret_cast<const uint8_t*>(payload.data()), payload.size()));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kBackendFailure, std::string("bad image response: ") + e.what(),
                endpoint_.base_url);
  } catch (const Error& e) {
    throw Error(ErrorKind::kBackendFailure, std::string("bad image response: ") + e.what(),
                endpoint_.base_url);
  }
}

}  // namespace designpipe
