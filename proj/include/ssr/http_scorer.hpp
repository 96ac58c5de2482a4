#pragma once

#include <memory>
#include <string>
#include <utility>

#include "ssr/external.hpp"

namespace ssr::external {

// Client for a COMET-style scoring service:
//   POST <path> {"src": ..., "mt": ..., "ref": ...?} -> {"score": number}
// Scores are clamped to [0, 1]. Retries with exponential backoff; after the
// last attempt either throws ScorerUnavailable or, with fallback_zero set,
// returns 0 so a run can limp on without external signal.
struct HttpScorerConfig {
  std::string url;  // e.g. "http://localhost:8900/score"
  ScorerKind kind = ScorerKind::reference_based;
  std::string auth_token_env = "SSR_SCORER_TOKEN";
  int timeout_ms = 10000;
  int retries = 2;       // attempts = retries + 1
  int backoff_ms = 100;  // doubled per retry
  bool fallback_zero = false;
  int max_concurrency = 4;
};

class HttpScorer final : public ExternalScorer {
 public:
  explicit HttpScorer(HttpScorerConfig config);
  ~HttpScorer() override;

  ScorerKind kind() const override { return config_.kind; }
  std::string identity() const override { return "http-scorer/" + config_.url; }
  double score(const std::string& src_text, const std::string& mt_text,
               const std::optional<std::string>& ref_text) override;

 private:
  struct Gate;
  HttpScorerConfig config_;
  std::string host_;  // scheme://host:port
  std::string path_;
  std::unique_ptr<Gate> gate_;  // caps in-flight requests at max_concurrency
};

// Splits "http://host:port/some/path" into ("http://host:port", "/some/path").
std::pair<std::string, std::string> split_url(const std::string& url);

}  // namespace ssr::external
