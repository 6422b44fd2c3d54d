#include "reacts/gateway.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "reacts/error.h"
#include "reacts/text.h"

namespace reacts {
namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void fnv_mix(std::uint64_t &h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
}

}  // namespace

GenerationConfig GenerationConfig::defaults_for(PromptKind kind) {
  GenerationConfig cfg;
  switch (kind) {
    case PromptKind::kSummary:
    case PromptKind::kSelfReflect:
      cfg.max_tokens = 256;
      break;
    case PromptKind::kSimilarity:
      cfg.max_tokens = 2;
      break;
    case PromptKind::kBaseline:
      cfg.max_tokens = 1024;
      break;
  }
  return cfg;
}

void GenerationConfig::validate() const {
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw ConfigError("top_p must be in (0, 1]");
  }
  if (max_tokens < 1) throw ConfigError("max_tokens must be positive");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

std::string request_fingerprint(PromptKind kind, const Slots &slots) {
  std::uint64_t h = kFnvOffset;
  fnv_mix(h, prompt_name(kind));
  fnv_mix(h, "\x1f");
  for (const auto &[key, value] : slots) {
    fnv_mix(h, key);
    fnv_mix(h, "\x1e");
    fnv_mix(h, value);
    fnv_mix(h, "\x1d");
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(prompt_name(kind)) + ":" + hex;
}

Embedding hashed_bow_embedding(std::string_view text, std::size_t dimension) {
  Embedding v(dimension, 0.0f);
  for (const std::string &token : alnum_tokens(text)) {
    std::uint64_t h = kFnvOffset;
    fnv_mix(h, token);
    v[h % dimension] += 1.0f;
  }
  double norm = 0.0;
  for (float x : v) norm += static_cast<double>(x) * x;
  if (norm > 0.0) {
    const double inv = 1.0 / std::sqrt(norm);
    for (float &x : v) x = static_cast<float>(x * inv);
  }
  return v;
}

MockScript MockScript::from_json(const std::string &text) {
  MockScript script;
  try {
    auto doc = nlohmann::json::parse(text);
    if (doc.contains("responses")) {
      script.responses =
          doc.at("responses").get<std::map<std::string, std::string>>();
    }
    if (doc.contains("template_defaults")) {
      script.template_defaults =
          doc.at("template_defaults").get<std::map<std::string, std::string>>();
      for (const auto &[name, _] : script.template_defaults) {
        if (!prompt_kind_from_name(name)) {
          throw DataError("mock script: unknown template \"" + name + "\"");
        }
      }
    }
    const std::string fallback = doc.value("fallback", "error");
    if (fallback == "error") {
      script.fallback = Fallback::kError;
    } else if (fallback == "echo") {
      script.fallback = Fallback::kEcho;
    } else {
      throw DataError("mock script: fallback must be \"error\" or \"echo\"");
    }
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("mock script: ") + e.what());
  }
  return script;
}

MockScript MockScript::load(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open mock script " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string MockScript::to_json() const {
  nlohmann::json doc = {
      {"fallback", fallback == Fallback::kEcho ? "echo" : "error"},
      {"responses", responses},
      {"template_defaults", template_defaults}};
  return doc.dump(2);
}

MockBackend::MockBackend(MockScript script, Responder responder,
                         std::size_t embedding_dimension)
    : script_(std::move(script)),
      responder_(std::move(responder)),
      dimension_(embedding_dimension) {}

std::string MockBackend::complete(const ChatRequest &request) {
  std::lock_guard<std::mutex> lock(mu_);
  calls_.push_back({request.kind, request.fingerprint, request.config.max_tokens});
  if (responder_) {
    if (auto answer = responder_(request)) return *answer;
  }
  if (auto it = script_.responses.find(request.fingerprint);
      it != script_.responses.end()) {
    return it->second;
  }
  if (auto it = script_.template_defaults.find(std::string(prompt_name(request.kind)));
      it != script_.template_defaults.end()) {
    return it->second;
  }
  if (script_.fallback == MockScript::Fallback::kEcho) return request.prompt;
  throw GatewayError("mock backend has no response for " + request.fingerprint);
}

std::vector<Embedding> MockBackend::embed(const std::vector<std::string> &texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto &t : texts) out.push_back(hashed_bow_embedding(t, dimension_));
  return out;
}

std::vector<MockBackend::Call> MockBackend::calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return calls_;
}

std::size_t MockBackend::call_count(PromptKind kind) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::size_t n = 0;
  for (const auto &c : calls_) n += c.kind == kind;
  return n;
}

void MockBackend::clear_calls() {
  std::lock_guard<std::mutex> lock(mu_);
  calls_.clear();
}

std::string HashedEmbeddingBackend::complete(const ChatRequest &) {
  throw GatewayError("hashed embedding backend cannot serve chat requests");
}

std::vector<Embedding> HashedEmbeddingBackend::embed(
    const std::vector<std::string> &texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto &t : texts) out.push_back(hashed_bow_embedding(t, dimension_));
  return out;
}

Gateway::Gateway(std::shared_ptr<Backend> chat, std::shared_ptr<Backend> embedder)
    : chat_(std::move(chat)), embedder_(std::move(embedder)) {
  if (!chat_ || !embedder_) throw ConfigError("gateway needs two backends");
}

std::string Gateway::chat(PromptKind kind, const Slots &slots,
                          const GenerationConfig &config) const {
  ChatRequest request;
  request.kind = kind;
  request.prompt = PromptTemplate::get(kind).render(slots);
  request.slots = slots;
  request.fingerprint = request_fingerprint(kind, slots);
  request.config = config;
  std::string response = chat_->complete(request);
  response.resize(trim_right(response).size());
  return response;
}

std::vector<Embedding> Gateway::embed(const std::vector<std::string> &texts) const {
  if (texts.empty()) throw GatewayError("embed called with no texts");
  std::vector<Embedding> vectors = embedder_->embed(texts);
  if (vectors.size() != texts.size()) {
    throw GatewayError("embedding backend returned " +
                       std::to_string(vectors.size()) + " vectors for " +
                       std::to_string(texts.size()) + " texts");
  }
  const std::size_t dim = vectors.front().size();
  for (const auto &v : vectors) {
    if (v.empty() || v.size() != dim) {
      throw GatewayError("embedding backend returned inconsistent dimensions");
    }
  }
  return vectors;
}

}  // namespace reacts
