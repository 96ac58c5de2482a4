#include <doctest.h>

#include "ssr/errors.hpp"
#include "ssr/random.hpp"
#include "ssr/rewards.hpp"

using namespace ssr;
using namespace ssr::rewards;

namespace {

protocol::FormatVerdict ok_verdict() {
  return protocol::check_format("<think>t</think><answer>x</answer>");
}

protocol::Judgment judgment_with(double score) {
  return protocol::parse_score("<think>t</think><answer>" + std::to_string(score) + "</answer>");
}

}  // namespace

TEST_CASE("format reward is the gate bit") {
  CHECK(compute_format_reward(ok_verdict()) == 1.0);
  CHECK(compute_format_reward(protocol::check_format("<think>t</think>")) == 0.0);
  CHECK(compute_format_reward(protocol::check_format("<think>t</think><answer> </answer>")) == 0.0);
}

TEST_CASE("self reward normalizes the 0-100 scale") {
  CHECK(compute_self_reward(judgment_with(85)) == doctest::Approx(0.85));
  CHECK(compute_self_reward(judgment_with(0)) == 0.0);
  protocol::Judgment failed;
  failed.parse_ok = false;
  CHECK(compute_self_reward(failed) == 0.0);
}

TEST_CASE("combine matches the reward law") {
  CHECK(combine(1.0, 0.85) == doctest::Approx(1.85));
  CHECK(combine(0.0, 0.85, 0.9) == 0.0);
  CHECK(combine(1.0, 0.85, 0.90) == doctest::Approx(2.75));
  CHECK(combine(1.0, 0.0) == 1.0);
  CHECK(combine(1.0, 1.0, 1.0) == 3.0);

  CHECK_THROWS_AS(combine(0.5, 0.5), InvalidInput);
  CHECK_THROWS_AS(combine(1.0, 1.5), InvalidInput);
  CHECK_THROWS_AS(combine(1.0, -0.1), InvalidInput);
  CHECK_THROWS_AS(combine(1.0, 0.5, 1.2), InvalidInput);
}

TEST_CASE("gating dominance and bounds under fuzzing") {
  rng::Rng rng(4242);
  for (int iter = 0; iter < 5000; ++iter) {
    const double rf = rng.next_below(2) ? 1.0 : 0.0;
    const double rs = rng.next_double();
    std::optional<double> re;
    if (rng.next_below(2)) re = rng.next_double();
    const double all = combine(rf, rs, re);
    if (rf == 0.0) {
      CHECK(all == 0.0);
    } else {
      CHECK(all >= 1.0);
      CHECK(all <= (re ? 3.0 : 2.0));
    }
  }
}

TEST_CASE("reward is strictly monotone in each component when gated open") {
  rng::Rng rng(7);
  for (int iter = 0; iter < 1000; ++iter) {
    const double rs = rng.next_double() * 0.9;
    const double re = rng.next_double() * 0.9;
    const double bump = 1e-3 + rng.next_double() * 0.05;
    CHECK(combine(1.0, rs + bump, re) > combine(1.0, rs, re));
    CHECK(combine(1.0, rs, re + bump) > combine(1.0, rs, re));
  }
}

TEST_CASE("make_breakdown wires the invariants") {
  auto b = make_breakdown(ok_verdict(), judgment_with(85), 0.9);
  CHECK(b.r_format == 1.0);
  CHECK(b.r_self == doctest::Approx(0.85));
  CHECK(b.r_all == doctest::Approx(2.75));
  CHECK(b.judge_parse_ok);

  auto gated = make_breakdown(protocol::check_format("bare"), judgment_with(85), 0.9);
  CHECK(gated.r_all == 0.0);

  protocol::Judgment unparsed;
  auto fallback = make_breakdown(ok_verdict(), unparsed);
  CHECK(fallback.r_self == 0.0);
  CHECK(fallback.r_all == 1.0);  // format bonus survives a failed judgment
  CHECK_FALSE(fallback.judge_parse_ok);
}
