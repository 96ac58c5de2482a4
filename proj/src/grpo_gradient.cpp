#include <cmath>

#include "ssr/errors.hpp"
#include "ssr/grpo.hpp"
#include "ssr/toy_policy.hpp"

namespace ssr::grpo {
namespace {

// Coefficient c such that d(min-term)/dtheta = c * d(logp_t)/dtheta for one
// token. The clip branch has zero gradient once the ratio leaves the clip
// interval; inside the interval both branches coincide.
double min_branch_coefficient(double ratio, double advantage, double lo, double hi) {
  const double unclipped = ratio * advantage;
  const double clipped = std::clamp(ratio, lo, hi) * advantage;
  if (unclipped <= clipped) return ratio * advantage;  // min selects the live branch
  return 0.0;
}

}  // namespace

policy::ToyGradient grpo_gradient(const policy::ToyPolicy& backend,
                                  std::span<const GradientGroup> groups,
                                  const GrpoConfig& config,
                                  const policy::ToyPolicy* ref_policy,
                                  double temperature) {
  if (groups.empty()) throw InvalidInput("grpo_gradient: empty batch");
  if (!backend.capabilities().can_train)
    throw UnsupportedBackend("grpo_gradient: backend is not differentiable");
  if (config.beta > 0.0 && ref_policy == nullptr)
    throw InvalidInput("grpo_gradient: beta > 0 requires a reference policy");

  const double lo = 1.0 - config.epsilon;
  const double hi = 1.0 + config.epsilon;
  const double batch_weight = 1.0 / static_cast<double>(groups.size());

  // Accumulates d(J)/d(params); negated at the end.
  policy::ToyGradient grad = policy::ToyGradient::zeros_like(backend.params());

  for (const auto& group : groups) {
    const size_t g = group.completions.size();
    if (g == 0) throw InvalidInput("grpo_gradient: group without candidates");
    if (group.logp_old.per_candidate.size() != g || group.advantages.values.size() != g)
      throw InvalidInput("grpo_gradient: group shapes disagree");
    const double group_weight = batch_weight / static_cast<double>(g);

    for (size_t i = 0; i < g; ++i) {
      const auto decisions = backend.parse_completion(group.actor_prompt, group.completions[i]);
      const auto lp_new = backend.decision_logprobs(decisions, temperature);
      const auto& lp_old = group.logp_old.per_candidate[i];
      if (lp_old.size() != lp_new.size())
        throw InvalidInput("grpo_gradient: stored trace length does not match completion");
      const double a = group.advantages.values[i];
      const size_t n_tok = lp_new.size();
      const double token_weight = group_weight / static_cast<double>(n_tok);

      if (config.ratio_level == RatioLevel::token) {
        for (size_t t = 0; t < n_tok; ++t) {
          const double ratio = std::exp(lp_new[t] - lp_old[t]);
          const double c = min_branch_coefficient(ratio, a, lo, hi);
          if (c != 0.0)
            backend.accumulate_decision_grad(decisions, t, token_weight * c, temperature, grad);
        }
      } else {
        double sum_new = 0.0, sum_old = 0.0;
        for (size_t t = 0; t < n_tok; ++t) {
          sum_new += lp_new[t];
          sum_old += lp_old[t];
        }
        const double ratio = std::exp(sum_new - sum_old);
        const double c = min_branch_coefficient(ratio, a, lo, hi);
        if (c != 0.0)
          for (size_t t = 0; t < n_tok; ++t)
            backend.accumulate_decision_grad(decisions, t, group_weight * c, temperature, grad);
      }

      if (config.beta > 0.0) {
        const auto lp_ref = ref_policy->decision_logprobs(decisions, temperature);
        for (size_t t = 0; t < n_tok; ++t) {
          // d/dlt [exp(lr - lt) - (lr - lt) - 1] = 1 - exp(lr - lt)
          const double dkl = 1.0 - std::exp(lp_ref[t] - lp_new[t]);
          backend.accumulate_decision_grad(decisions, t, -config.beta * token_weight * dkl,
                                           temperature, grad);
        }
      }

      if (config.entropy_coef > 0.0)
        for (size_t t = 0; t < n_tok; ++t)
          backend.accumulate_decision_grad(decisions, t, -config.entropy_coef * token_weight,
                                           temperature, grad);
    }
  }

  grad.scale(-1.0);  // gradient of the negated objective
  return grad;
}

}  // namespace ssr::grpo
