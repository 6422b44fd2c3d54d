#pragma once

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "reacts/gateway.h"

namespace reacts {

// OpenAI-compatible HTTP front end for a MockBackend. Requests carry the
// prompt fingerprint in the X-Prompt-Fingerprint header; without it the
// fingerprint is computed over the raw prompt text.
class MockServer {
 public:
  explicit MockServer(std::shared_ptr<MockBackend> backend);
  ~MockServer();

  MockServer(const MockServer &) = delete;
  MockServer &operator=(const MockServer &) = delete;

  // Binds (port 0 picks a free port) and serves on a background thread.
  // Returns the bound port.
  int start(const std::string &host = "127.0.0.1", int port = 0);
  // Serves on the calling thread until stop() is called from elsewhere.
  void run(const std::string &host, int port);
  void stop();

  // The next n chat requests are answered with the given HTTP status.
  void fail_next(int n, int status);

  // JSON bodies of every request received so far.
  std::vector<nlohmann::json> received() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace reacts
