#pragma once

#include <span>
#include <string>
#include <vector>

namespace ssr::policy {
class ToyPolicy;
struct ToyGradient;
}  // namespace ssr::policy

namespace ssr::grpo {

enum class RatioLevel { token, sequence };

struct GrpoConfig {
  double epsilon = 0.2;        // clip radius
  double beta = 0.0;           // KL coefficient against the reference policy
  double entropy_coef = 0.0;   // weight on the sampled-entropy bonus
  RatioLevel ratio_level = RatioLevel::token;
  double sigma_min = 1e-8;     // below this group std, advantages collapse to 0
  int inner_updates = 1;       // optimizer steps reusing one rollout batch
};

// Group-normalized advantages. When group_std > sigma_min the values have
// mean 0 and population std 1; a degenerate group yields all zeros.
struct AdvantageSet {
  std::vector<double> values;
  double group_mean = 0.0;
  double group_std = 0.0;  // population std of the input rewards
};

// Per-candidate, per-decision log-probabilities under one policy snapshot.
struct LogprobTrace {
  std::string policy;  // label only: "theta", "theta_old", "ref"
  std::vector<std::vector<double>> per_candidate;
};

AdvantageSet group_advantages(std::span<const double> rewards, double sigma_min = 1e-8);

// Clipped importance-weighted objective for one rollout group. Token level
// averages the per-token min terms within each candidate; sequence level
// forms a single ratio from summed log-probs. The KL penalty (requires
// lp_ref) is subtracted and the entropy bonus added after averaging.
double clipped_surrogate(const LogprobTrace& lp_new, const LogprobTrace& lp_old,
                         const AdvantageSet& advantages, const GrpoConfig& config,
                         const LogprobTrace* lp_ref = nullptr);

// Nonnegative unbiased KL estimator exp(d) - d - 1 with d = lp_ref - lp_theta,
// averaged over tokens within each candidate and then over candidates.
double kl_penalty(const LogprobTrace& lp_theta, const LogprobTrace& lp_ref);

// Rollout data for one prompt, as consumed by grpo_gradient.
struct GradientGroup {
  std::string actor_prompt;
  std::vector<std::string> completions;
  LogprobTrace logp_old;      // sample-time traces
  AdvantageSet advantages;
};

// Gradient of the negated batch objective (-J) with respect to the toy
// policy parameters, evaluating logp_new under the current parameters at
// `temperature`. ref_policy is required when config.beta > 0.
policy::ToyGradient grpo_gradient(const policy::ToyPolicy& backend,
                                  std::span<const GradientGroup> groups,
                                  const GrpoConfig& config,
                                  const policy::ToyPolicy* ref_policy = nullptr,
                                  double temperature = 1.0);

}  // namespace ssr::grpo
