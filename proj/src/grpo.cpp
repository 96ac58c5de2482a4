#include "ssr/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "ssr/errors.hpp"

namespace ssr::grpo {
namespace {

void require_aligned(const LogprobTrace& a, const LogprobTrace& b, const char* where) {
  if (a.per_candidate.size() != b.per_candidate.size())
    throw InvalidInput(std::string(where) + ": candidate counts differ");
  for (size_t i = 0; i < a.per_candidate.size(); ++i)
    if (a.per_candidate[i].size() != b.per_candidate[i].size())
      throw InvalidInput(std::string(where) + ": token counts differ within a candidate");
}

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

AdvantageSet group_advantages(std::span<const double> rewards, double sigma_min) {
  if (rewards.empty()) throw InvalidInput("group_advantages: empty group");
  for (double r : rewards)
    if (!std::isfinite(r)) throw InvalidInput("group_advantages: non-finite reward");

  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;

  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= n;  // population variance
  const double std_dev = std::sqrt(var);

  AdvantageSet out;
  out.group_mean = mean;
  out.group_std = std_dev;
  out.values.resize(rewards.size(), 0.0);
  if (std_dev > sigma_min)
    for (size_t i = 0; i < rewards.size(); ++i) out.values[i] = (rewards[i] - mean) / std_dev;
  return out;
}

double clipped_surrogate(const LogprobTrace& lp_new, const LogprobTrace& lp_old,
                         const AdvantageSet& advantages, const GrpoConfig& config,
                         const LogprobTrace* lp_ref) {
  require_aligned(lp_new, lp_old, "clipped_surrogate");
  const size_t g = lp_new.per_candidate.size();
  if (g == 0) throw InvalidInput("clipped_surrogate: empty group");
  if (advantages.values.size() != g)
    throw InvalidInput("clipped_surrogate: advantage count does not match candidates");
  if (config.beta > 0.0 && lp_ref == nullptr)
    throw InvalidInput("clipped_surrogate: beta > 0 requires a reference trace");

  const double lo = 1.0 - config.epsilon;
  const double hi = 1.0 + config.epsilon;

  double objective = 0.0;
  for (size_t i = 0; i < g; ++i) {
    const auto& cn = lp_new.per_candidate[i];
    const auto& co = lp_old.per_candidate[i];
    if (cn.empty()) throw InvalidInput("clipped_surrogate: empty candidate trace");
    const double a = advantages.values[i];
    double term = 0.0;
    if (config.ratio_level == RatioLevel::token) {
      for (size_t t = 0; t < cn.size(); ++t) {
        const double ratio = std::exp(cn[t] - co[t]);
        term += std::min(ratio * a, std::clamp(ratio, lo, hi) * a);
      }
      term /= static_cast<double>(cn.size());
    } else {
      const double ratio = std::exp(sum(cn) - sum(co));
      term = std::min(ratio * a, std::clamp(ratio, lo, hi) * a);
    }
    objective += term;
  }
  objective /= static_cast<double>(g);

  if (config.beta > 0.0) objective -= config.beta * kl_penalty(lp_new, *lp_ref);
  if (config.entropy_coef > 0.0) {
    // Sampled-entropy estimate: mean of -log p over the trace.
    double ent = 0.0;
    for (const auto& cand : lp_new.per_candidate) {
      double c = 0.0;
      for (double lp : cand) c -= lp;
      ent += c / static_cast<double>(cand.size());
    }
    objective += config.entropy_coef * ent / static_cast<double>(g);
  }
  return objective;
}

double kl_penalty(const LogprobTrace& lp_theta, const LogprobTrace& lp_ref) {
  require_aligned(lp_theta, lp_ref, "kl_penalty");
  if (lp_theta.per_candidate.empty()) throw InvalidInput("kl_penalty: empty trace");
  double total = 0.0;
  for (size_t i = 0; i < lp_theta.per_candidate.size(); ++i) {
    const auto& ct = lp_theta.per_candidate[i];
    const auto& cr = lp_ref.per_candidate[i];
    if (ct.empty()) throw InvalidInput("kl_penalty: empty candidate trace");
    double c = 0.0;
    for (size_t t = 0; t < ct.size(); ++t) {
      const double d = cr[t] - ct[t];
      c += std::exp(d) - d - 1.0;  // >= 0, zero iff d == 0
    }
    total += c / static_cast<double>(ct.size());
  }
  return total / static_cast<double>(lp_theta.per_candidate.size());
}

}  // namespace ssr::grpo
