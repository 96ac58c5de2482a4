#pragma once

#include <optional>

#include "ssr/protocol.hpp"

namespace ssr::rewards {

// Per-candidate reward components. The format gate dominates: r_format = 0
// forces r_all = 0 regardless of the other components.
struct RewardBreakdown {
  double r_format = 0.0;                  // {0, 1}
  double r_self = 0.0;                    // [0, 1]
  std::optional<double> r_external;       // [0, 1] when a scorer is attached
  double r_all = 0.0;                     // 0, or 1 + r_self (+ r_external)
  bool judge_parse_ok = false;
};

double compute_format_reward(const protocol::FormatVerdict& verdict);

// Judge score normalized from the 0-100 scale to [0, 1]; an unparseable
// judgment is worth 0 (the candidate keeps its format bonus).
double compute_self_reward(const protocol::Judgment& judgment);

// Combines components into the scalar training reward. Throws InvalidInput
// when r_format is not 0/1 or a component is outside [0, 1].
double combine(double r_format, double r_self, std::optional<double> r_external = std::nullopt);

RewardBreakdown make_breakdown(const protocol::FormatVerdict& verdict,
                               const protocol::Judgment& judgment,
                               std::optional<double> r_external = std::nullopt);

}  // namespace ssr::rewards
