#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "reacts/prompts.h"

namespace reacts {

// Decoding settings forwarded verbatim to the backend.
struct GenerationConfig {
  double temperature = 0.0;
  double top_p = 1.0;
  int max_tokens = 256;
  std::string model_name = "default";
  std::string endpoint;
  std::chrono::milliseconds timeout{120000};
  int max_retries = 3;
  std::chrono::milliseconds backoff{250};

  // Defaults per prompt: 256 tokens for summaries and self-reflection, 2 for
  // event similarity, 1024 for the baseline timeline.
  static GenerationConfig defaults_for(PromptKind kind);

  // Throws ConfigError on temperature < 0, top_p outside (0, 1],
  // max_tokens < 1 or max_retries < 0.
  void validate() const;
};

using Embedding = std::vector<float>;

// "<template name>:<16 hex digits>", FNV-1a over the slot names and values.
std::string request_fingerprint(PromptKind kind, const Slots &slots);

struct ChatRequest {
  PromptKind kind = PromptKind::kSummary;
  Slots slots;
  std::string prompt;  // rendered
  std::string fingerprint;
  GenerationConfig config;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const ChatRequest &request) = 0;
  virtual std::vector<Embedding> embed(const std::vector<std::string> &texts) = 0;
};

// L2-normalized hashed bag of words over alnum_tokens(); FNV-1a bucket per
// token. Texts without tokens map to the zero vector.
Embedding hashed_bow_embedding(std::string_view text, std::size_t dimension);
inline constexpr std::size_t kMockEmbeddingDimension = 256;

// Canned responses keyed by request fingerprint. Lookup order: exact
// fingerprint, then the per-template default, then the fallback policy.
struct MockScript {
  enum class Fallback { kError, kEcho };

  std::map<std::string, std::string> responses;
  std::map<std::string, std::string> template_defaults;
  Fallback fallback = Fallback::kError;

  static MockScript load(const std::filesystem::path &path);
  static MockScript from_json(const std::string &text);
  std::string to_json() const;
};

// Deterministic in-process backend. An optional responder is consulted
// before the script; returning nullopt defers to the script.
class MockBackend : public Backend {
 public:
  using Responder = std::function<std::optional<std::string>(const ChatRequest &)>;

  explicit MockBackend(MockScript script = {}, Responder responder = nullptr,
                       std::size_t embedding_dimension = kMockEmbeddingDimension);

  std::string complete(const ChatRequest &request) override;
  std::vector<Embedding> embed(const std::vector<std::string> &texts) override;

  struct Call {
    PromptKind kind;
    std::string fingerprint;
    int max_tokens;
  };
  std::vector<Call> calls() const;
  std::size_t call_count(PromptKind kind) const;
  void clear_calls();

 private:
  MockScript script_;
  Responder responder_;
  std::size_t dimension_;
  mutable std::mutex mu_;
  std::vector<Call> calls_;
};

// Embedding-only backend built on hashed_bow_embedding; complete() throws.
class HashedEmbeddingBackend : public Backend {
 public:
  explicit HashedEmbeddingBackend(std::size_t dimension = kMockEmbeddingDimension)
      : dimension_(dimension) {}
  std::string complete(const ChatRequest &request) override;
  std::vector<Embedding> embed(const std::vector<std::string> &texts) override;

 private:
  std::size_t dimension_;
};

struct HttpBackendOptions {
  std::string base_url;  // e.g. http://localhost:8000/v1
  std::string api_key;
  std::string embedding_model = "default";
  std::chrono::milliseconds timeout{120000};
  int max_retries = 3;
  std::chrono::milliseconds backoff{250};
  int max_in_flight = 8;
};

// OpenAI-compatible client: POST {base}/chat/completions and
// {base}/embeddings. Transport failures are retried with exponential
// backoff; non-2xx responses fail immediately with the status attached.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendOptions options);
  ~HttpBackend() override;

  std::string complete(const ChatRequest &request) override;
  std::vector<Embedding> embed(const std::vector<std::string> &texts) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// The single entry point used by the pipeline. Chat and embedding traffic can
// go to different backends.
class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> chat, std::shared_ptr<Backend> embedder);
  explicit Gateway(std::shared_ptr<Backend> both) : Gateway(both, both) {}

  // Renders the template, sends it, and returns the response with trailing
  // whitespace removed.
  std::string chat(PromptKind kind, const Slots &slots,
                   const GenerationConfig &config) const;

  // One vector per input, same order and dimension. Empty input is an error.
  std::vector<Embedding> embed(const std::vector<std::string> &texts) const;

 private:
  std::shared_ptr<Backend> chat_;
  std::shared_ptr<Backend> embedder_;
};

}  // namespace reacts
