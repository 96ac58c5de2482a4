// Acceptance suite: runs every release gate end to end and prints one
// pass/fail line per criterion. Exits nonzero if any gate fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures/gradient_check.hpp"
#include "fixtures/score_cases.hpp"
#include "ssr/evalharness.hpp"
#include "ssr/external.hpp"
#include "ssr/grpo.hpp"
#include "ssr/protocol.hpp"
#include "ssr/random.hpp"
#include "ssr/rewards.hpp"
#include "ssr/task.hpp"
#include "ssr/textutil.hpp"
#include "ssr/toy_policy.hpp"
#include "ssr/trainer.hpp"

namespace fs = std::filesystem;
using namespace ssr;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
  int number;
  std::string name;
  double budget_seconds;
  std::function<void(std::ostringstream&)> run;
};

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& what) {
  if (!condition) throw Failure(what);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Shared toy-scale run configuration: corpus seed 7, vocab 20, 500 pairs,
// batch 50, G=8, epsilon 0.2, beta 0, 4 epochs.
struct ToyRun {
  task::CipherSpec cipher;
  task::Corpus corpus;
  policy::ToyInit init{1.5, 0.5, 0.1};

  ToyRun() {
    auto generated = task::gen_corpus(7, 20, 500, 5, 12);
    cipher = std::move(generated.first);
    corpus = std::move(generated.second);
  }

  train::TrainConfig config(train::RewardMode mode, uint64_t seed) const {
    auto cfg = train::TrainConfig::toy_defaults();
    cfg.batch_size = 50;
    cfg.group_size = 8;
    cfg.epochs = 4;
    cfg.reward_mode = mode;
    cfg.seed = seed;
    return cfg;
  }
};

struct TrainedRun {
  double best_aggregated = 0.0;
  double best_ref_based_min = 0.0;  // worse of the two directions
  double final_eval_format_rate = 0.0;
  double final_sampled_format_rate = 0.0;
  double first_mean_r_all = 0.0;
  double last_mean_r_all = 0.0;
};

TrainedRun run_training(const ToyRun& world, train::RewardMode mode, uint64_t seed,
                        const fs::path& out_dir) {
  auto policy = policy::ToyPolicy::from_cipher(world.cipher, world.init);
  external::OracleRefScorer scorer;
  const bool wants_scorer =
      mode == train::RewardMode::ssr_x || mode == train::RewardMode::external_only;
  train::SsrTrainer trainer(policy, world.config(mode, seed), wants_scorer ? &scorer : nullptr);
  train::TrainOptions options;
  options.out_dir = out_dir;
  const auto result = trainer.train(world.corpus.train, options);

  TrainedRun out;
  out.first_mean_r_all = result.metrics.front().mean_r_all;
  out.last_mean_r_all = result.metrics.back().mean_r_all;
  out.final_sampled_format_rate = result.metrics.back().format_rate;

  std::vector<std::pair<int64_t, double>> reports;
  std::vector<evalharness::EvalReport> evals;
  for (const auto& info : result.checkpoints) {
    const auto ckpt = train::load_checkpoint(info.path);
    policy::ToyPolicy snapshot(ckpt.vocab, ckpt.params);
    evals.push_back(evalharness::evaluate(snapshot, world.corpus.test, world.cipher));
    reports.emplace_back(info.step, evals.back().aggregated);
  }
  const int64_t best_step = train::select_best_checkpoint(reports);
  for (size_t i = 0; i < reports.size(); ++i) {
    if (reports[i].first == best_step) {
      out.best_aggregated = evals[i].aggregated;
      double worst = 1.0;
      for (const auto& d : evals[i].directions) worst = std::min(worst, d.ref_based);
      out.best_ref_based_min = worst;
    }
  }
  out.final_eval_format_rate = evals.back().format_rate;
  return out;
}

// --- criteria ---

void advantage_math(std::ostringstream& detail) {
  rng::Rng rng(1001);
  const int group_sizes[] = {1, 2, 8, 16};
  int normalized = 0, degenerate = 0;
  for (int iter = 0; iter < 1000; ++iter) {
    const int g = group_sizes[iter % 4];
    std::vector<double> rewards(g);
    const bool force_uniform = rng.next_below(5) == 0;
    const double base = rng.next_double() * 3.0;
    for (auto& r : rewards) r = force_uniform ? base : rng.next_double() * 3.0;
    const auto adv = grpo::group_advantages(rewards, 1e-8);
    if (adv.group_std > 1e-8) {
      double mean = 0.0, var = 0.0;
      for (double v : adv.values) mean += v;
      mean /= g;
      for (double v : adv.values) var += (v - mean) * (v - mean);
      const double pop_std = std::sqrt(var / g);
      require(std::abs(mean) <= 1e-9, "advantage mean exceeds 1e-9");
      require(std::abs(pop_std - 1.0) <= 1e-9, "advantage population std deviates from 1");
      ++normalized;
    } else {
      for (double v : adv.values) require(v == 0.0, "degenerate group must be all zeros");
      ++degenerate;
    }
  }
  const auto fixed = grpo::group_advantages(std::vector<double>{1.0, 2.0, 3.0});
  require(std::abs(fixed.values[0] + 1.224745) < 1e-6, "[1,2,3] case: first advantage");
  require(std::abs(fixed.values[1]) < 1e-9, "[1,2,3] case: middle advantage");
  require(std::abs(fixed.values[2] - 1.224745) < 1e-6, "[1,2,3] case: last advantage");
  detail << normalized << " normalized + " << degenerate << " degenerate groups";
}

void gradient_fidelity(std::ostringstream& detail) {
  double worst = 0.0;
  for (uint64_t seed : {101ULL, 202ULL, 303ULL}) {
    auto [cipher, corpus] = task::gen_corpus(seed, 20, 4, 5, 12, 0.0);
    auto policy = policy::ToyPolicy::from_cipher(cipher, policy::ToyInit{1.5, 0.5, 0.2});
    // one prompt per direction
    std::vector<protocol::TranslationPrompt> prompts{corpus.monolingual[0],
                                                     corpus.monolingual[3]};
    auto groups = testing::sample_groups(policy, cipher, prompts, 4, seed, 1.0);
    const auto check =
        testing::finite_difference_check(policy, groups, grpo::GrpoConfig{}, nullptr, 1.0, 1e-5);
    worst = std::max(worst, check.max_rel_err);
    require(check.max_rel_err < 1e-4,
            "relative error " + text::format_double(check.max_rel_err) + " at seed " +
                std::to_string(seed));
  }
  detail << "max relative error " << text::format_double(worst) << " over 3 seeds x 802 params";
}

void reward_gating(std::ostringstream& detail) {
  rng::Rng rng(3003);
  const std::vector<std::string> pieces = {
      "<think>", "</think>", "<answer>", "</answer>", "text", "b1 b2", " ", "\n", "85", "\"",
  };
  int gated = 0, open = 0;
  for (int iter = 0; iter < 10000; ++iter) {
    std::string response;
    const size_t n = rng.next_below(8);
    for (size_t i = 0; i < n; ++i) response += pieces[rng.next_below(pieces.size())];
    const auto verdict = protocol::check_format(response);
    const double r_format = rewards::compute_format_reward(verdict);
    require((r_format == 0.0) == !verdict.ok, "r_format must mirror the gate");

    const double r_self = rng.next_double();
    std::optional<double> r_external;
    if (rng.next_below(2)) r_external = rng.next_double();
    const double r_all = rewards::combine(r_format, r_self, r_external);
    if (!verdict.ok) {
      require(r_all == 0.0, "gated rewards must be exactly zero");
      ++gated;
    } else {
      require(r_all == 1.0 + r_self + (r_external ? *r_external : 0.0),
              "open-gate reward must be exactly 1 + components");
      ++open;
    }
  }
  detail << gated << " gated / " << open << " open of 10000 fuzzed responses";
}

void score_extraction(std::ostringstream& detail) {
  int passed = 0;
  for (const auto& c : testing::score_cases()) {
    const auto j = protocol::parse_score(c.response);
    require(j.parse_ok == c.parse_ok, "parse_ok mismatch on: " + c.response);
    if (c.parse_ok)
      require(std::abs(*j.score - *c.score) < 1e-9, "score mismatch on: " + c.response);
    ++passed;
  }
  require(passed == 50, "fixture suite must hold exactly 50 cases");
  detail << passed << "/50 fixtures";
}

void objective_identities(std::ostringstream& detail) {
  rng::Rng rng(5005);
  grpo::GrpoConfig cfg;

  // ratio-one identity
  for (int iter = 0; iter < 200; ++iter) {
    const size_t g = 1 + rng.next_below(8);
    grpo::LogprobTrace lp{"t", {}};
    std::vector<double> rewards(g);
    for (size_t i = 0; i < g; ++i) {
      const size_t n = 1 + rng.next_below(6);
      lp.per_candidate.emplace_back();
      for (size_t t = 0; t < n; ++t) lp.per_candidate.back().push_back(-3.0 * rng.next_double());
      rewards[i] = rng.next_double() * 2.0;
    }
    const auto adv = grpo::group_advantages(rewards);
    double mean_adv = 0.0;
    for (double a : adv.values) mean_adv += a;
    mean_adv /= g;
    const double obj = grpo::clipped_surrogate(lp, lp, adv, cfg);
    require(std::abs(obj - mean_adv) <= 1e-12, "ratio-one objective must equal mean advantage");
  }

  // clip arithmetic, exact
  {
    grpo::LogprobTrace lp_new{"t", {{std::log(2.0)}}};
    grpo::LogprobTrace lp_old{"t", {{0.0}}};
    grpo::AdvantageSet adv{{1.0}, 0.0, 1.0};
    require(grpo::clipped_surrogate(lp_new, lp_old, adv, cfg) == 1.2,
            "rho=2.0, A=+1 must clip to 1.2");
  }
  {
    grpo::LogprobTrace lp_new{"t", {{std::log(0.5)}}};
    grpo::LogprobTrace lp_old{"t", {{0.0}}};
    grpo::AdvantageSet adv{{-1.0}, 0.0, 1.0};
    require(grpo::clipped_surrogate(lp_new, lp_old, adv, cfg) == -0.8,
            "rho=0.5, A=-1 must keep the pessimistic -0.8");
  }

  // KL estimator: zero at identity, nonnegative on 1000 random traces
  for (int iter = 0; iter < 1000; ++iter) {
    const size_t g = 1 + rng.next_below(4);
    grpo::LogprobTrace a{"t", {}}, b{"r", {}};
    for (size_t i = 0; i < g; ++i) {
      const size_t n = 1 + rng.next_below(6);
      a.per_candidate.emplace_back();
      b.per_candidate.emplace_back();
      for (size_t t = 0; t < n; ++t) {
        a.per_candidate.back().push_back(-5.0 * rng.next_double());
        b.per_candidate.back().push_back(-5.0 * rng.next_double());
      }
    }
    require(grpo::kl_penalty(a, a) == 0.0, "KL(x, x) must be exactly zero");
    require(grpo::kl_penalty(a, b) >= 0.0, "KL estimator must be nonnegative");
  }
  detail << "ratio-one, clip cases, and k3 positivity all hold";
}

void end_to_end_training(std::ostringstream& detail) {
  ToyRun world;

  // baseline: the untrained policy scores (near) zero under greedy eval
  auto untrained = policy::ToyPolicy::from_cipher(world.cipher, world.init);
  const auto base_eval = evalharness::evaluate(untrained, world.corpus.test, world.cipher);
  double base_worst = 0.0;
  for (const auto& d : base_eval.directions) base_worst = std::max(base_worst, d.ref_based);
  require(base_worst <= 0.10, "untrained policy must stay at or below 0.10");

  for (uint64_t seed : {7ULL, 8ULL, 9ULL}) {
    TempDir dir("ssr_accept_c6_" + std::to_string(seed));
    const auto run = run_training(world, train::RewardMode::ssr, seed, dir.path);
    require(run.best_ref_based_min >= 0.90,
            "seed " + std::to_string(seed) + ": best checkpoint reference-based score " +
                text::format_double(run.best_ref_based_min) + " below 0.90");
    require(run.final_eval_format_rate >= 0.95,
            "seed " + std::to_string(seed) + ": final checkpoint format rate below 0.95");
    require(run.last_mean_r_all > run.first_mean_r_all,
            "seed " + std::to_string(seed) + ": training reward did not increase");
    if (seed == 7)
      detail << "untrained " << text::format_double(base_worst) << " -> trained "
             << text::format_double(run.best_ref_based_min) << " (ref-based, worse direction); ";
  }
  detail << "3/3 seeds passed";
}

void external_reward_dominance(std::ostringstream& detail) {
  ToyRun world;
  int wins = 0;
  for (uint64_t seed : {7ULL, 8ULL, 9ULL}) {
    TempDir plain_dir("ssr_accept_c7_plain_" + std::to_string(seed));
    TempDir aug_dir("ssr_accept_c7_aug_" + std::to_string(seed));
    const auto plain = run_training(world, train::RewardMode::ssr, seed, plain_dir.path);
    const auto augmented = run_training(world, train::RewardMode::ssr_x, seed, aug_dir.path);
    if (augmented.best_aggregated >= plain.best_aggregated) ++wins;
  }
  require(wins >= 2, "externally augmented reward won only " + std::to_string(wins) + "/3 seeds");
  detail << "augmented >= self-only in " << wins << "/3 seeds";
}

void resume_equivalence(std::ostringstream& detail) {
  ToyRun world;
  const auto cfg = world.config(train::RewardMode::ssr, 7);

  TempDir full_dir("ssr_accept_c8_full");
  {
    auto policy = policy::ToyPolicy::from_cipher(world.cipher, world.init);
    train::SsrTrainer trainer(policy, cfg);
    train::TrainOptions options;
    options.out_dir = full_dir.path;
    trainer.train(world.corpus.train, options);
  }

  TempDir part_dir("ssr_accept_c8_part");
  {
    auto policy = policy::ToyPolicy::from_cipher(world.cipher, world.init);
    train::SsrTrainer trainer(policy, cfg);
    train::TrainOptions options;
    options.out_dir = part_dir.path;
    options.stop_after_step = 20;  // interrupt at the first checkpoint boundary
    trainer.train(world.corpus.train, options);
  }
  {
    const auto ckpt = train::load_checkpoint(part_dir.path / "checkpoint_000020.ssrck");
    policy::ToyPolicy policy(ckpt.vocab, ckpt.params);
    train::SsrTrainer trainer(policy, cfg);
    train::TrainOptions options;
    options.out_dir = part_dir.path;
    options.resume_from_step = ckpt.step;
    trainer.train(world.corpus.train, options);
  }

  require(slurp(full_dir.path / "metrics.csv") == slurp(part_dir.path / "metrics.csv"),
          "metrics CSVs differ between uninterrupted and resumed runs");
  require(slurp(full_dir.path / "rollouts.jsonl") == slurp(part_dir.path / "rollouts.jsonl"),
          "rollout exports differ between uninterrupted and resumed runs");
  require(slurp(full_dir.path / "checkpoint_000072.ssrck") ==
              slurp(part_dir.path / "checkpoint_000072.ssrck"),
          "final checkpoints are not bit-identical");
  detail << "metrics, rollouts, and final checkpoint bit-identical across interrupt/resume";
}

void judge_determinism(std::ostringstream& detail) {
  auto [cipher, corpus] = task::gen_corpus(7, 20, 10, 5, 12, 0.0);
  const policy::ToyInit inits[] = {{1.5, 0.5, 0.1}, {0.0, 0.5, 0.0}, {20.0, 1.0, 0.0}};
  int fixtures = 0;
  for (const auto& init : inits) {
    auto policy = policy::ToyPolicy::from_cipher(cipher, init);
    for (int k = 0; k < 4; ++k) {
      const auto& prompt = corpus.monolingual[k];
      // judge both a perfect candidate and a deliberately weak one, with and
      // without the reference line
      for (const std::string mt : {cipher.translate(prompt.src_text), std::string("b1")}) {
        for (bool with_ref : {false, true}) {
          const auto jp = protocol::render_judge_prompt(
              prompt.src_lang, prompt.tgt_lang, prompt.src_text, mt,
              with_ref ? prompt.ref_text : std::nullopt);
          const auto first = policy.generate(jp, 0.0, 64, 0).text;
          for (int rep = 0; rep < 10; ++rep)
            require(policy.generate(jp, 0.0, 64, 0).text == first,
                    "judge reply changed across repeats");
          ++fixtures;
        }
      }
    }
  }
  detail << fixtures << " fixtures x 10 repeats byte-identical";
}

void quote_pathology(std::ostringstream& detail) {
  auto [cipher, corpus] = task::gen_corpus(7, 20, 100, 5, 12);
  auto policy = policy::ToyPolicy::from_cipher(cipher, policy::ToyInit{20.0, 0.999, 0.9});
  const auto report = evalharness::evaluate(policy, corpus.test, cipher);
  require(report.quote_rate > 0.8,
          "quote-wrap rate " + text::format_double(report.quote_rate) + " not above 0.8");
  require(report.aggregated_stripped > report.aggregated,
          "stripped score must exceed the raw score");
  detail << "quote rate " << text::format_double(report.quote_rate) << ", raw "
         << text::format_double(report.aggregated) << " < stripped "
         << text::format_double(report.aggregated_stripped);
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "advantage normalization math", 5.0, advantage_math},
      {2, "gradient fidelity vs central finite differences", 60.0, gradient_fidelity},
      {3, "format gate zeroes rewards bit-exactly", 10.0, reward_gating},
      {4, "score-extraction fixture suite", 10.0, score_extraction},
      {5, "objective identities and KL positivity", 10.0, objective_identities},
      {6, "end-to-end self-rewarding training on the toy task", 600.0, end_to_end_training},
      {7, "externally augmented reward matches or beats self-only", 1200.0,
       external_reward_dominance},
      {8, "interrupt/resume bit-exact equivalence", 120.0, resume_equivalence},
      {9, "temperature-zero judge determinism", 30.0, judge_determinism},
      {10, "quote-wrapping pathology instrumentation", 30.0, quote_pathology},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    std::ostringstream detail;
    const auto start = Clock::now();
    std::string error;
    try {
      criterion.run(detail);
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (error.empty() && seconds > criterion.budget_seconds)
      error = "runtime " + text::format_double(seconds) + "s exceeds budget";
    if (error.empty()) {
      const std::string suffix = detail.str().empty() ? "" : ("- " + detail.str());
      std::printf("[PASS] %2d. %s (%.2fs) %s\n", criterion.number, criterion.name.c_str(), seconds,
                  suffix.c_str());
    } else {
      ++failures;
      std::printf("[FAIL] %2d. %s (%.2fs) - %s\n", criterion.number, criterion.name.c_str(),
                  seconds, error.c_str());
    }
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
