#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ssr/policy.hpp"
#include "ssr/task.hpp"

namespace ssr::policy {

// Token vocabulary and language tags of a cipher pair; the policy needs the
// vocabularies but never sees the true mapping (only init helpers do).
struct ToyVocab {
  std::string lang_a;
  std::string lang_b;
  std::vector<std::string> tokens_a;
  std::vector<std::string> tokens_b;

  int index_a(std::string_view token) const;
  int index_b(std::string_view token) const;
};

// Learnable parameters of the toy transduction policy. Each generated
// response is a short chain of decisions: one categorical draw per source
// token (a softmax row of the direction's logit matrix), one Bernoulli
// format decision (emit the think/answer wrapping or bare text), and one
// Bernoulli quote decision (wrap the answer payload in ASCII double quotes).
struct ToyPolicyParams {
  std::vector<std::vector<double>> fwd_logits;  // lang_a -> lang_b rows
  std::vector<std::vector<double>> bwd_logits;  // lang_b -> lang_a rows
  double format_logit = 0.0;
  double quote_logit = 0.0;
  uint64_t rng_state = 0;  // used only when generate() gets no explicit seed
};

struct ToyGradient {
  std::vector<std::vector<double>> fwd_logits;
  std::vector<std::vector<double>> bwd_logits;
  double format_logit = 0.0;
  double quote_logit = 0.0;

  static ToyGradient zeros_like(const ToyPolicyParams& params);
  void scale(double factor);
  double l2_norm() const;
};

// Initial parameter choices. translation_prior is the logit edge given to
// the true mapping entries: 0 yields a fully uniform policy, larger values
// emulate a base model that already carries weak task knowledge but
// unreliable output formatting.
struct ToyInit {
  double translation_prior = 1.5;
  double format_prob = 0.5;
  double quote_prob = 0.1;
};

class ToyPolicy final : public PolicyBackend {
 public:
  ToyPolicy(ToyVocab vocab, ToyPolicyParams params);

  // Builds a policy over the cipher's vocabularies, with init.translation_prior
  // added to each correct-mapping logit in both directions.
  static ToyPolicy from_cipher(const task::CipherSpec& cipher, const ToyInit& init = {});

  BackendCapabilities capabilities() const override { return {true, true, true}; }
  std::string identity() const override;

  // Dispatches on the prompt template: actor prompts sample a translation,
  // judge prompts produce a deterministic score. Throws ProtocolMismatch for
  // unrecognized prompts.
  GenerationResult generate(const std::string& prompt_text, double temperature, int max_tokens,
                            std::optional<uint64_t> seed = std::nullopt) override;

  GenerationResult act(const std::string& actor_prompt, double temperature, int max_tokens,
                       std::optional<uint64_t> seed = std::nullopt);

  // Deterministic self-confidence judge: scores a candidate by the mean
  // probability its own translation rows assign to the candidate's tokens,
  // scaled to 0-100. Length mismatches and out-of-vocabulary tokens score 0,
  // mirroring the judge prompt's zero rules. Shares parameters with act().
  GenerationResult judge(const std::string& judge_prompt) const;

  std::vector<double> score_logprobs(const std::string& prompt_text,
                                     const std::string& completion_text,
                                     double temperature = 1.0) override;

  // params <- params + learning_rate * gradient (gradient ascent when the
  // gradient points toward higher objective). Throws InvalidInput on shape
  // mismatch.
  void apply_gradient(const ToyGradient& gradient, double learning_rate);

  const ToyVocab& vocab() const { return vocab_; }
  ToyPolicyParams& params() { return params_; }
  const ToyPolicyParams& params() const { return params_; }

  // --- decision plumbing shared with the GRPO gradient ---

  // direction 0: lang_a -> lang_b, 1: lang_b -> lang_a
  struct Decisions {
    int direction = 0;
    std::vector<int> src_ids;
    std::vector<int> out_ids;  // may be shorter than src_ids if truncated
    bool format_ok = false;
    bool quoted = false;

    size_t count() const { return out_ids.size() + 2; }
  };

  // Recovers the decision chain that produces `completion_text` for the
  // given actor prompt, or throws InvalidCompletion when the text is outside
  // the policy's support.
  Decisions parse_completion(const std::string& actor_prompt,
                             const std::string& completion_text) const;

  // Log-probability of each decision at the given temperature (> 0).
  std::vector<double> decision_logprobs(const Decisions& d, double temperature) const;

  // Adds weight * d(log p of decision `index`)/d(params) into `grad`.
  void accumulate_decision_grad(const Decisions& d, size_t index, double weight,
                                double temperature, ToyGradient& grad) const;

  std::string render_completion(const Decisions& d) const;

 private:
  struct ActorRequest {
    int direction;
    std::vector<int> src_ids;
  };
  ActorRequest parse_actor_request(const std::string& actor_prompt) const;

  const std::vector<std::vector<double>>& logits_for(int direction) const {
    return direction == 0 ? params_.fwd_logits : params_.bwd_logits;
  }
  const std::vector<std::string>& out_tokens_for(int direction) const {
    return direction == 0 ? vocab_.tokens_b : vocab_.tokens_a;
  }

  ToyVocab vocab_;
  ToyPolicyParams params_;
};

// Numerically stable log-softmax of row/temperature.
std::vector<double> log_softmax(const std::vector<double>& logits, double temperature);

double sigmoid(double x);
double logit_from_prob(double p);  // clamped inverse sigmoid

}  // namespace ssr::policy
