#pragma once

#include <string>

#include "ssr/policy.hpp"

namespace ssr::policy {

// Chat-completions-style remote backend. Generation only: no log-probs and
// no parameter updates, so training runs against it operate in
// annotate-and-export mode.
struct HttpBackendConfig {
  std::string url;  // e.g. "http://localhost:8000/v1/chat/completions"
  std::string model = "default";
  std::string auth_token_env = "SSR_API_TOKEN";
  int timeout_ms = 30000;
  int retries = 2;
  int backoff_ms = 200;
};

class HttpBackend final : public PolicyBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  BackendCapabilities capabilities() const override { return {true, false, false}; }
  std::string identity() const override { return "http/" + config_.model + "@" + config_.url; }

  GenerationResult generate(const std::string& prompt_text, double temperature, int max_tokens,
                            std::optional<uint64_t> seed = std::nullopt) override;

 private:
  HttpBackendConfig config_;
  std::string host_;
  std::string path_;
};

}  // namespace ssr::policy
