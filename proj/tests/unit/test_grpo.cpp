#include <doctest.h>

#include <cmath>

#include "ssr/errors.hpp"
#include "ssr/grpo.hpp"
#include "ssr/random.hpp"

using namespace ssr;
using namespace ssr::grpo;

namespace {

LogprobTrace trace(std::vector<std::vector<double>> values, std::string name = "t") {
  LogprobTrace t;
  t.policy = std::move(name);
  t.per_candidate = std::move(values);
  return t;
}

double population_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= v.size();
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return std::sqrt(var / v.size());
}

}  // namespace

TEST_CASE("group_advantages on the hand-computed case") {
  const double expect = std::sqrt(1.5);  // (3 - 2) / sqrt(2/3)
  auto a = group_advantages(std::vector<double>{1.0, 2.0, 3.0});
  REQUIRE(a.values.size() == 3);
  CHECK(a.values[0] == doctest::Approx(-1.224745).epsilon(1e-6));
  CHECK(a.values[0] == doctest::Approx(-expect).epsilon(1e-12));
  CHECK(a.values[1] == doctest::Approx(0.0));
  CHECK(a.values[2] == doctest::Approx(expect).epsilon(1e-12));
  CHECK(a.group_mean == doctest::Approx(2.0));
  CHECK(a.group_std == doctest::Approx(std::sqrt(2.0 / 3.0)));
}

TEST_CASE("group_advantages degenerate groups collapse to zero") {
  auto a = group_advantages(std::vector<double>{5.0, 5.0, 5.0});
  CHECK(a.values == std::vector<double>{0.0, 0.0, 0.0});
  auto single = group_advantages(std::vector<double>{7.0});
  CHECK(single.values == std::vector<double>{0.0});
}

TEST_CASE("group_advantages rejects bad input") {
  CHECK_THROWS_AS(group_advantages(std::vector<double>{}), InvalidInput);
  CHECK_THROWS_AS(group_advantages(std::vector<double>{1.0, std::nan("")}), InvalidInput);
  CHECK_THROWS_AS(group_advantages(std::vector<double>{1.0, INFINITY}), InvalidInput);
}

TEST_CASE("normalized advantages have mean 0 and population std 1") {
  rng::Rng rng(11);
  for (int iter = 0; iter < 500; ++iter) {
    const size_t g = 2 + rng.next_below(15);
    std::vector<double> rewards(g);
    for (auto& r : rewards) r = rng.next_double() * 3.0;
    auto a = group_advantages(rewards);
    if (a.group_std <= 1e-8) {
      for (double v : a.values) CHECK(v == 0.0);
      continue;
    }
    double mean = 0.0;
    for (double v : a.values) mean += v;
    CHECK(std::abs(mean / g) < 1e-9);
    CHECK(population_std(a.values) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("advantages are invariant to positive affine reward maps") {
  rng::Rng rng(13);
  for (int iter = 0; iter < 300; ++iter) {
    const size_t g = 2 + rng.next_below(10);
    std::vector<double> rewards(g), mapped(g);
    for (auto& r : rewards) r = rng.next_double();
    const double scale = 0.1 + rng.next_double() * 5.0;
    const double shift = rng.next_double() * 10.0 - 5.0;
    for (size_t i = 0; i < g; ++i) mapped[i] = scale * rewards[i] + shift;
    auto a = group_advantages(rewards);
    auto b = group_advantages(mapped);
    if (a.group_std <= 1e-8) continue;
    for (size_t i = 0; i < g; ++i) CHECK(b.values[i] == doctest::Approx(a.values[i]).epsilon(1e-9));
  }
}

TEST_CASE("surrogate identities from the clip arithmetic") {
  GrpoConfig cfg;  // epsilon 0.2

  SUBCASE("ratio one reduces to the mean advantage") {
    auto lp = trace({{-0.5, -0.2}, {-1.0}, {-0.3, -0.7, -0.1}});
    AdvantageSet adv{{-1.2247, 0.0, 1.2247}, 0, 1};
    const double obj = clipped_surrogate(lp, lp, adv, cfg);
    const double mean_adv = (-1.2247 + 0.0 + 1.2247) / 3.0;
    CHECK(obj == doctest::Approx(mean_adv).epsilon(1e-12));
  }

  SUBCASE("positive advantage clips from above") {
    // single candidate, single token, ratio 2.0, A = +1
    auto lp_new = trace({{std::log(2.0)}});
    auto lp_old = trace({{0.0}});
    AdvantageSet adv{{1.0}, 0, 1};
    CHECK(clipped_surrogate(lp_new, lp_old, adv, cfg) == doctest::Approx(1.2));
  }

  SUBCASE("negative advantage keeps the pessimistic branch") {
    // ratio 0.5, A = -1: min(-0.5, -0.8) = -0.8
    auto lp_new = trace({{std::log(0.5)}});
    auto lp_old = trace({{0.0}});
    AdvantageSet adv{{-1.0}, 0, 1};
    CHECK(clipped_surrogate(lp_new, lp_old, adv, cfg) == doctest::Approx(-0.8));
  }
}

TEST_CASE("clipping is inert when every ratio is inside the window") {
  rng::Rng rng(17);
  GrpoConfig cfg;
  for (int iter = 0; iter < 200; ++iter) {
    const size_t g = 1 + rng.next_below(6);
    std::vector<std::vector<double>> old_lp(g), new_lp(g);
    std::vector<double> adv_values(g);
    for (size_t i = 0; i < g; ++i) {
      const size_t n = 1 + rng.next_below(5);
      for (size_t t = 0; t < n; ++t) {
        const double lo = -3.0 * rng.next_double();
        // keep the ratio within (1 - eps, 1 + eps)
        const double delta = (rng.next_double() - 0.5) * 2.0 * std::log(1.0 + cfg.epsilon * 0.9);
        old_lp[i].push_back(lo);
        new_lp[i].push_back(lo + delta);
      }
      adv_values[i] = rng.next_double() * 4.0 - 2.0;
    }
    AdvantageSet adv{adv_values, 0, 1};
    const double clipped = clipped_surrogate(trace(new_lp), trace(old_lp), adv, cfg);

    double unclipped = 0.0;  // plain importance-weighted objective
    for (size_t i = 0; i < g; ++i) {
      double term = 0.0;
      for (size_t t = 0; t < new_lp[i].size(); ++t)
        term += std::exp(new_lp[i][t] - old_lp[i][t]) * adv_values[i];
      unclipped += term / new_lp[i].size();
    }
    unclipped /= g;
    CHECK(clipped == doctest::Approx(unclipped).epsilon(1e-12));
  }
}

TEST_CASE("clipped contribution never exceeds the unclipped one") {
  rng::Rng rng(23);
  GrpoConfig cfg;
  for (int iter = 0; iter < 2000; ++iter) {
    const double ratio = 0.05 + rng.next_double() * 3.0;
    const double a = rng.next_double() * 4.0 - 2.0;
    const double clipped =
        std::min(ratio * a, std::clamp(ratio, 1.0 - cfg.epsilon, 1.0 + cfg.epsilon) * a);
    CHECK(clipped <= ratio * a + 1e-15);
  }
}

TEST_CASE("sequence-level ratios use summed log-probabilities") {
  GrpoConfig cfg;
  cfg.ratio_level = RatioLevel::sequence;
  // two tokens whose ratios multiply to 2.0; token-level would average them
  auto lp_new = trace({{std::log(2.0), 0.0}});
  auto lp_old = trace({{0.0, 0.0}});
  AdvantageSet adv{{1.0}, 0, 1};
  CHECK(clipped_surrogate(lp_new, lp_old, adv, cfg) == doctest::Approx(1.2));  // clip(2.0) * 1

  cfg.ratio_level = RatioLevel::token;
  CHECK(clipped_surrogate(lp_new, lp_old, adv, cfg) == doctest::Approx((1.2 + 1.0) / 2.0));
}

TEST_CASE("kl_penalty on the hand-computed case") {
  // lt = log 0.5, lr = log 0.25: exp(lr-lt) - (lr-lt) - 1 = 0.5 + log2 - 1
  auto lt = trace({{std::log(0.5)}});
  auto lr = trace({{std::log(0.25)}});
  CHECK(kl_penalty(lt, lr) == doctest::Approx(0.5 + std::log(2.0) - 1.0).epsilon(1e-12));
  CHECK(kl_penalty(lt, lr) == doctest::Approx(0.1931).epsilon(1e-4));
}

TEST_CASE("kl_penalty is zero at identity and nonnegative everywhere") {
  rng::Rng rng(31);
  for (int iter = 0; iter < 1000; ++iter) {
    const size_t g = 1 + rng.next_below(4);
    std::vector<std::vector<double>> a(g), b(g);
    for (size_t i = 0; i < g; ++i) {
      const size_t n = 1 + rng.next_below(6);
      for (size_t t = 0; t < n; ++t) {
        a[i].push_back(-4.0 * rng.next_double());
        b[i].push_back(-4.0 * rng.next_double());
      }
    }
    CHECK(kl_penalty(trace(a), trace(a)) == 0.0);
    CHECK(kl_penalty(trace(a), trace(b)) >= 0.0);
  }
}

TEST_CASE("kl_penalty is zero only for identical traces") {
  auto a = trace({{-0.5, -0.25}});
  auto b = trace({{-0.5, -0.2500001}});
  CHECK(kl_penalty(a, b) > 0.0);
}

TEST_CASE("shape mismatches are rejected") {
  auto a = trace({{-0.5, -0.2}});
  auto b = trace({{-0.5}});
  AdvantageSet adv{{1.0}, 0, 1};
  GrpoConfig cfg;
  CHECK_THROWS_AS(clipped_surrogate(a, b, adv, cfg), InvalidInput);
  CHECK_THROWS_AS(kl_penalty(a, b), InvalidInput);
  AdvantageSet bad_adv{{1.0, 2.0}, 0, 1};
  CHECK_THROWS_AS(clipped_surrogate(a, a, bad_adv, cfg), InvalidInput);
  cfg.beta = 0.1;
  CHECK_THROWS_AS(clipped_surrogate(a, a, adv, cfg), InvalidInput);  // missing reference
}

TEST_CASE("beta adds the KL penalty after averaging") {
  GrpoConfig cfg;
  cfg.beta = 0.5;
  auto lp = trace({{-0.5}});
  auto ref = trace({{-1.5}});
  AdvantageSet adv{{1.0}, 0, 1};
  const double base = clipped_surrogate(lp, lp, adv, GrpoConfig{});
  const double with_kl = clipped_surrogate(lp, lp, adv, cfg, &ref);
  CHECK(with_kl == doctest::Approx(base - 0.5 * kl_penalty(lp, ref)).epsilon(1e-12));
}
