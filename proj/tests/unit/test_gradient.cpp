#include <doctest.h>

#include "fixtures/gradient_check.hpp"
#include "ssr/errors.hpp"

using namespace ssr;
using namespace ssr::testing;

namespace {

struct Fixture {
  task::CipherSpec cipher;
  std::vector<protocol::TranslationPrompt> prompts;
};

Fixture make_fixture(uint64_t seed) {
  auto [cipher, corpus] = task::gen_corpus(seed, 8, 4, 3, 5, 0.0);
  Fixture f;
  f.cipher = cipher;
  f.prompts = {corpus.monolingual[0], corpus.monolingual[3]};  // one per direction
  return f;
}

policy::ToyPolicy midrange_policy(const task::CipherSpec& cipher) {
  policy::ToyInit init;
  init.translation_prior = 1.0;
  init.format_prob = 0.5;
  init.quote_prob = 0.2;
  return policy::ToyPolicy::from_cipher(cipher, init);
}

}  // namespace

TEST_CASE("analytic gradient matches central finite differences") {
  auto f = make_fixture(42);
  auto policy = midrange_policy(f.cipher);
  auto groups = sample_groups(policy, f.cipher, f.prompts, 4, 42, 1.0);
  const auto check = finite_difference_check(policy, groups, grpo::GrpoConfig{}, nullptr, 1.0);
  CHECK(check.n_params == 2 * 8 * 8 + 2);
  CHECK(check.max_rel_err < 1e-4);
}

TEST_CASE("gradient check holds with KL penalty, entropy bonus, and sequence ratios") {
  auto f = make_fixture(123);
  auto policy = midrange_policy(f.cipher);
  auto ref = policy::ToyPolicy::from_cipher(f.cipher, policy::ToyInit{0.4, 0.6, 0.1});
  auto groups = sample_groups(policy, f.cipher, f.prompts, 4, 9, 1.0);

  grpo::GrpoConfig cfg;
  cfg.beta = 0.3;
  cfg.entropy_coef = 0.01;
  CHECK(finite_difference_check(policy, groups, cfg, &ref, 1.0).max_rel_err < 1e-4);

  cfg.ratio_level = grpo::RatioLevel::sequence;
  CHECK(finite_difference_check(policy, groups, cfg, &ref, 1.0).max_rel_err < 1e-4);
}

TEST_CASE("gradient check holds away from temperature one") {
  auto f = make_fixture(7);
  auto policy = midrange_policy(f.cipher);
  auto groups = sample_groups(policy, f.cipher, f.prompts, 4, 77, 0.7);
  CHECK(finite_difference_check(policy, groups, grpo::GrpoConfig{}, nullptr, 0.7).max_rel_err <
        1e-4);
}

TEST_CASE("uniform rewards produce a zero gradient") {
  auto f = make_fixture(5);
  auto policy = midrange_policy(f.cipher);
  auto groups = sample_groups(policy, f.cipher, f.prompts, 4, 5, 1.0);
  for (auto& g : groups)
    g.advantages = grpo::group_advantages(std::vector<double>(g.completions.size(), 1.5));
  const auto grad = grpo::grpo_gradient(policy, groups, grpo::GrpoConfig{}, nullptr, 1.0);
  CHECK(grad.l2_norm() == 0.0);
}

TEST_CASE("with beta zero the reference policy is irrelevant") {
  auto f = make_fixture(11);
  auto policy = midrange_policy(f.cipher);
  auto ref = policy::ToyPolicy::from_cipher(f.cipher, policy::ToyInit{3.0, 0.9, 0.0});
  auto groups = sample_groups(policy, f.cipher, f.prompts, 4, 11, 1.0);
  const auto without = flatten(grpo::grpo_gradient(policy, groups, grpo::GrpoConfig{}, nullptr, 1.0));
  const auto with = flatten(grpo::grpo_gradient(policy, groups, grpo::GrpoConfig{}, &ref, 1.0));
  CHECK(without == with);
}

TEST_CASE("grpo_gradient validates its inputs") {
  auto f = make_fixture(3);
  auto policy = midrange_policy(f.cipher);
  auto groups = sample_groups(policy, f.cipher, f.prompts, 2, 3, 1.0);

  CHECK_THROWS_AS(grpo::grpo_gradient(policy, std::vector<grpo::GradientGroup>{}, grpo::GrpoConfig{}),
                  InvalidInput);

  grpo::GrpoConfig with_kl;
  with_kl.beta = 0.1;
  CHECK_THROWS_AS(grpo::grpo_gradient(policy, groups, with_kl, nullptr), InvalidInput);

  auto broken = groups;
  broken[0].advantages.values.pop_back();
  CHECK_THROWS_AS(grpo::grpo_gradient(policy, broken, grpo::GrpoConfig{}), InvalidInput);
}
