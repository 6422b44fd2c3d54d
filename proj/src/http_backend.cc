#include <semaphore>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "reacts/error.h"
#include "reacts/gateway.h"

namespace reacts {
namespace {

using nlohmann::json;

// "http://host:port/v1" -> {"http://host:port", "/v1"}
std::pair<std::string, std::string> split_base_url(const std::string &url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint must start with http:// or https:// (got \"" +
                      url + "\")");
  }
  auto path_begin = url.find('/', scheme_end + 3);
  if (path_begin == std::string::npos) return {url, ""};
  std::string path = url.substr(path_begin);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, path_begin), path};
}

}  // namespace

struct HttpBackend::Impl {
  explicit Impl(HttpBackendOptions opts)
      : options(std::move(opts)), in_flight(std::max(1, options.max_in_flight)) {}

  // POSTs body to base + path, retrying transport failures. Returns the
  // parsed JSON of a 2xx response.
  json post(const std::string &base, const std::string &path, const json &body,
            const httplib::Headers &extra, std::chrono::milliseconds timeout,
            int max_retries, std::chrono::milliseconds backoff) {
    auto [host, prefix] = split_base_url(base);
    httplib::Headers headers = extra;
    if (!options.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + options.api_key);
    }
    const std::string payload = body.dump();
    const auto seconds = timeout.count() / 1000;
    const auto micros = (timeout.count() % 1000) * 1000;

    in_flight.acquire();
    struct Release {
      std::counting_semaphore<1024> &s;
      ~Release() { s.release(); }
    } release{in_flight};

    for (int attempt = 0;; ++attempt) {
      httplib::Client client(host);
      client.set_connection_timeout(seconds, micros);
      client.set_read_timeout(seconds, micros);
      client.set_write_timeout(seconds, micros);
      auto res = client.Post(prefix + path, headers, payload, "application/json");
      if (!res) {
        if (attempt >= max_retries) {
          throw GatewayError("transport failure for " + base + path + " after " +
                             std::to_string(attempt + 1) + " attempt(s): " +
                             httplib::to_string(res.error()));
        }
        std::this_thread::sleep_for(backoff * (1LL << std::min(attempt, 16)));
        continue;
      }
      if (res->status < 200 || res->status >= 300) {
        throw GatewayError("HTTP " + std::to_string(res->status) + " from " +
                               base + path + ": " + res->body.substr(0, 512),
                           res->status);
      }
      try {
        return json::parse(res->body);
      } catch (const json::parse_error &e) {
        throw GatewayError("malformed JSON from " + base + path + ": " + e.what(),
                           res->status);
      }
    }
  }

  HttpBackendOptions options;
  std::counting_semaphore<1024> in_flight;
};

HttpBackend::HttpBackend(HttpBackendOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {
  if (impl_->options.base_url.empty()) throw ConfigError("HTTP backend needs a base URL");
  split_base_url(impl_->options.base_url);
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::complete(const ChatRequest &request) {
  const GenerationConfig &cfg = request.config;
  json body = {{"model", cfg.model_name},
               {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
               {"temperature", cfg.temperature},
               {"top_p", cfg.top_p},
               {"max_tokens", cfg.max_tokens}};
  // Extra headers are ignored by real servers; the bundled mock server keys
  // its canned responses on them.
  httplib::Headers headers = {
      {"X-Prompt-Fingerprint", request.fingerprint},
      {"X-Prompt-Template", std::string(prompt_name(request.kind))}};
  const std::string base = cfg.endpoint.empty() ? impl_->options.base_url : cfg.endpoint;
  json reply = impl_->post(base, "/chat/completions", body, headers, cfg.timeout,
                           cfg.max_retries, cfg.backoff);
  try {
    const json &content = reply.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const json::exception &e) {
    throw GatewayError(std::string("unexpected chat completion payload: ") + e.what());
  }
}

std::vector<Embedding> HttpBackend::embed(const std::vector<std::string> &texts) {
  json body = {{"model", impl_->options.embedding_model}, {"input", texts}};
  json reply = impl_->post(impl_->options.base_url, "/embeddings", body, {},
                           impl_->options.timeout, impl_->options.max_retries,
                           impl_->options.backoff);
  std::vector<Embedding> out(texts.size());
  try {
    const json &data = reply.at("data");
    if (data.size() != texts.size()) {
      throw GatewayError("embeddings endpoint returned " +
                         std::to_string(data.size()) + " items for " +
                         std::to_string(texts.size()) + " inputs");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::size_t index = data[i].value("index", i);
      if (index >= out.size() || !out[index].empty()) {
        throw GatewayError("embeddings endpoint returned a bad index");
      }
      out[index] = data[i].at("embedding").get<Embedding>();
    }
  } catch (const json::exception &e) {
    throw GatewayError(std::string("unexpected embeddings payload: ") + e.what());
  }
  return out;
}

}  // namespace reacts
