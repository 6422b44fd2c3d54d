#include "reacts/mock_server.h"

#include <mutex>
#include <thread>

#include "httplib.h"
#include "reacts/error.h"

namespace reacts {

using nlohmann::json;

struct MockServer::Impl {
  std::shared_ptr<MockBackend> backend;
  httplib::Server server;
  std::thread thread;
  mutable std::mutex mu;
  std::vector<json> received;
  int fail_remaining = 0;
  int fail_status = 500;

  void install() {
    server.Post(R"(.*/chat/completions)",
                [this](const httplib::Request &req, httplib::Response &res) {
                  chat(req, res);
                });
    server.Post(R"(.*/embeddings)",
                [this](const httplib::Request &req, httplib::Response &res) {
                  embeddings(req, res);
                });
  }

  bool record(const httplib::Request &req, httplib::Response &res, json *body) {
    try {
      *body = json::parse(req.body);
    } catch (const json::parse_error &e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      return false;
    }
    std::lock_guard<std::mutex> lock(mu);
    received.push_back(*body);
    if (fail_remaining > 0) {
      --fail_remaining;
      res.status = fail_status;
      res.set_content(json{{"error", "injected failure"}}.dump(), "application/json");
      return false;
    }
    return true;
  }

  void chat(const httplib::Request &req, httplib::Response &res) {
    json body;
    if (!record(req, res, &body)) return;
    ChatRequest request;
    try {
      request.prompt = body.at("messages").back().at("content").get<std::string>();
      request.config.max_tokens = body.value("max_tokens", 256);
      request.config.temperature = body.value("temperature", 0.0);
      request.config.top_p = body.value("top_p", 1.0);
      request.config.model_name = body.value("model", "default");
    } catch (const json::exception &e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      return;
    }
    auto kind = prompt_kind_from_name(req.get_header_value("X-Prompt-Template"));
    request.kind = kind.value_or(PromptKind::kSummary);
    request.fingerprint = req.get_header_value("X-Prompt-Fingerprint");
    if (request.fingerprint.empty()) {
      request.fingerprint = request_fingerprint(request.kind, {{"prompt", request.prompt}});
    }
    std::string answer;
    try {
      answer = backend->complete(request);
    } catch (const GatewayError &e) {
      res.status = 404;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      return;
    }
    json reply = {
        {"id", "mock-" + request.fingerprint},
        {"object", "chat.completion"},
        {"model", request.config.model_name},
        {"choices",
         json::array({{{"index", 0},
                       {"message", {{"role", "assistant"}, {"content", answer}}},
                       {"finish_reason", "stop"}}})}};
    res.set_content(reply.dump(), "application/json");
  }

  void embeddings(const httplib::Request &req, httplib::Response &res) {
    json body;
    if (!record(req, res, &body)) return;
    std::vector<std::string> texts;
    try {
      const json &input = body.at("input");
      if (input.is_string()) {
        texts.push_back(input.get<std::string>());
      } else {
        texts = input.get<std::vector<std::string>>();
      }
    } catch (const json::exception &e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      return;
    }
    auto vectors = backend->embed(texts);
    json data = json::array();
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      data.push_back({{"object", "embedding"}, {"index", i}, {"embedding", vectors[i]}});
    }
    res.set_content(json{{"object", "list"}, {"data", data}, {"model", body.value("model", "default")}}.dump(),
                    "application/json");
  }
};

MockServer::MockServer(std::shared_ptr<MockBackend> backend)
    : impl_(std::make_unique<Impl>()) {
  impl_->backend = std::move(backend);
  impl_->install();
}

MockServer::~MockServer() { stop(); }

int MockServer::start(const std::string &host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw ConfigError("mock server cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void MockServer::run(const std::string &host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw ConfigError("mock server cannot listen on " + host + ":" + std::to_string(port));
  }
}

void MockServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void MockServer::fail_next(int n, int status) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  impl_->fail_remaining = n;
  impl_->fail_status = status;
}

std::vector<json> MockServer::received() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->received;
}

}  // namespace reacts
