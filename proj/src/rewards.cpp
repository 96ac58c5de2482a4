#include "ssr/rewards.hpp"

#include <cmath>

#include "ssr/errors.hpp"

namespace ssr::rewards {

double compute_format_reward(const protocol::FormatVerdict& verdict) {
  return verdict.ok ? 1.0 : 0.0;
}

double compute_self_reward(const protocol::Judgment& judgment) {
  if (!judgment.parse_ok || !judgment.score) return 0.0;
  return *judgment.score / 100.0;
}

double combine(double r_format, double r_self, std::optional<double> r_external) {
  if (r_format != 0.0 && r_format != 1.0) throw InvalidInput("combine: r_format must be 0 or 1");
  if (!(r_self >= 0.0 && r_self <= 1.0)) throw InvalidInput("combine: r_self outside [0, 1]");
  if (r_external && !(*r_external >= 0.0 && *r_external <= 1.0))
    throw InvalidInput("combine: r_external outside [0, 1]");
  if (r_format == 0.0) return 0.0;
  return 1.0 + r_self + (r_external ? *r_external : 0.0);
}

RewardBreakdown make_breakdown(const protocol::FormatVerdict& verdict,
                               const protocol::Judgment& judgment,
                               std::optional<double> r_external) {
  RewardBreakdown b;
  b.r_format = compute_format_reward(verdict);
  b.r_self = compute_self_reward(judgment);
  b.r_external = r_external;
  b.judge_parse_ok = judgment.parse_ok;
  b.r_all = combine(b.r_format, b.r_self, b.r_external);
  return b;
}

}  // namespace ssr::rewards
