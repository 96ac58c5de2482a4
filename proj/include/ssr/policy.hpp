#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ssr::policy {

struct BackendCapabilities {
  bool can_generate = false;
  bool can_logprob = false;
  bool can_train = false;  // implies can_logprob
};

// One sampled response. token_logprobs holds the sample-time log-probability
// of every decision the backend made (present iff the backend can score
// log-probabilities; deterministic judge replies carry an empty trace).
struct GenerationResult {
  std::string text;
  std::optional<std::vector<double>> token_logprobs;
  uint64_t seed_used = 0;
};

// The model serving both actor and judge roles. A backend receives fully
// rendered prompt text and decides from the template which role is being
// requested.
class PolicyBackend {
 public:
  virtual ~PolicyBackend() = default;

  virtual BackendCapabilities capabilities() const = 0;
  virtual std::string identity() const = 0;

  // temperature 0 is greedy and deterministic given identical parameters;
  // temperature > 0 samples, reproducibly when a seed is supplied.
  virtual GenerationResult generate(const std::string& prompt_text, double temperature,
                                    int max_tokens, std::optional<uint64_t> seed = std::nullopt) = 0;

  // Per-decision log-probabilities of `completion_text` under the current
  // parameters. Throws UnsupportedBackend unless can_logprob.
  virtual std::vector<double> score_logprobs(const std::string& prompt_text,
                                             const std::string& completion_text,
                                             double temperature = 1.0);
};

}  // namespace ssr::policy
