#include "ssr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ssr/errors.hpp"
#include "ssr/random.hpp"
#include "ssr/textutil.hpp"

namespace ssr::train {

std::string_view to_string(RewardMode mode) {
  switch (mode) {
    case RewardMode::ssr: return "ssr";
    case RewardMode::ssr_x: return "ssr_x";
    case RewardMode::external_only: return "external_only";
    case RewardMode::llm_judge_external: return "llm_judge_external";
  }
  return "ssr";
}

RewardMode reward_mode_from_string(std::string_view name) {
  if (name == "ssr") return RewardMode::ssr;
  if (name == "ssr_x") return RewardMode::ssr_x;
  if (name == "external_only") return RewardMode::external_only;
  if (name == "llm_judge_external") return RewardMode::llm_judge_external;
  throw InvalidInput("unknown reward mode: " + std::string(name));
}

TrainConfig TrainConfig::toy_defaults() {
  TrainConfig cfg;
  cfg.group_size = 8;
  cfg.max_gen_tokens = 64;
  cfg.learning_rate = 10.0;
  return cfg;
}

std::string metrics_csv_header() {
  return "step,mean_r_all,mean_r_self,format_rate,mean_answer_tokens,grad_norm";
}

std::string to_csv(const MetricsRow& row) {
  std::string out = std::to_string(row.step);
  for (double v : {row.mean_r_all, row.mean_r_self, row.format_rate, row.mean_answer_tokens,
                   row.grad_norm}) {
    out += ',';
    out += text::format_double(v);
  }
  return out;
}

void export_rollout_groups(std::ostream& out, std::span<const RolloutGroup> groups, int64_t step) {
  for (const auto& group : groups) {
    nlohmann::ordered_json j;
    j["step"] = step;
    j["prompt_id"] = group.prompt.id;
    j["direction"] = group.prompt.src_lang + "->" + group.prompt.tgt_lang;
    j["src"] = group.prompt.src_text;
    if (group.prompt.ref_text) j["ref"] = *group.prompt.ref_text;
    auto candidates = nlohmann::ordered_json::array();
    for (size_t i = 0; i < group.candidates.size(); ++i) {
      nlohmann::ordered_json c;
      c["text"] = group.candidates[i].text;
      if (group.verdicts[i].ok) c["answer"] = group.answers[i];
      c["format_ok"] = group.verdicts[i].ok;
      if (!group.judgments[i].raw_text.empty()) c["judgment_text"] = group.judgments[i].raw_text;
      c["r_self"] = group.rewards[i].r_self;
      c["r_format"] = group.rewards[i].r_format;
      if (group.rewards[i].r_external) c["r_external"] = *group.rewards[i].r_external;
      c["r_all"] = group.rewards[i].r_all;
      c["advantage"] = group.advantages.values[i];
      if (group.candidates[i].token_logprobs) {
        double s = 0.0;
        for (double lp : *group.candidates[i].token_logprobs) s += lp;
        c["logprob_sum"] = s;
      }
      candidates.push_back(std::move(c));
    }
    j["candidates"] = std::move(candidates);
    j["template_version"] = std::string(protocol::kTemplateVersion);
    out << j.dump() << '\n';
  }
}

SsrTrainer::SsrTrainer(policy::PolicyBackend& backend, TrainConfig config,
                       external::ExternalScorer* scorer, policy::PolicyBackend* judge_backend)
    : backend_(backend), config_(config), scorer_(scorer), judge_backend_(judge_backend) {
  if (config_.batch_size < 1) throw InvalidInput("TrainConfig: batch_size must be >= 1");
  if (config_.group_size < 1) throw InvalidInput("TrainConfig: group_size must be >= 1");
  if (config_.epochs < 1) throw InvalidInput("TrainConfig: epochs must be >= 1");
  if (config_.grpo.inner_updates < 1) throw InvalidInput("GrpoConfig: inner_updates must be >= 1");

  auto* toy = dynamic_cast<policy::ToyPolicy*>(&backend_);
  if (config_.reward_mode == RewardMode::llm_judge_external && judge_backend_ == nullptr) {
    if (toy == nullptr)
      throw InvalidInput("llm_judge_external needs an explicit judge backend for remote actors");
    // Snapshot at construction: the external judge never sees parameter updates.
    frozen_judge_ = std::make_unique<policy::ToyPolicy>(*toy);
    judge_backend_ = frozen_judge_.get();
  }
  if (config_.grpo.beta > 0.0 && toy != nullptr)
    ref_policy_ = std::make_unique<policy::ToyPolicy>(*toy);
}

void SsrTrainer::validate(std::span<const protocol::TranslationPrompt> prompts) const {
  if (prompts.empty()) throw InvalidInput("train: empty prompt set");
  const bool wants_scorer = config_.reward_mode == RewardMode::ssr_x ||
                            config_.reward_mode == RewardMode::external_only;
  if (wants_scorer && scorer_ == nullptr)
    throw InvalidInput("reward mode " + std::string(to_string(config_.reward_mode)) +
                       " requires an external scorer");
  const bool needs_ref =
      (wants_scorer && scorer_->kind() == external::ScorerKind::reference_based) ||
      config_.judge_with_reference;
  if (needs_ref)
    for (const auto& p : prompts)
      if (!p.ref_text)
        throw InvalidInput("prompt " + p.id +
                           " lacks ref_text but the configuration requires references");
  for (const auto& p : prompts) {
    if (p.src_text.empty()) throw InvalidInput("prompt " + p.id + " has empty src_text");
    if (p.src_lang == p.tgt_lang)
      throw InvalidInput("prompt " + p.id + " has identical source and target languages");
  }
}

policy::PolicyBackend& SsrTrainer::judge_for_mode() {
  if (config_.reward_mode == RewardMode::llm_judge_external) return *judge_backend_;
  return backend_;
}

StepResult SsrTrainer::run_step(std::span<const protocol::TranslationPrompt> batch,
                                int64_t step_index) {
  if (batch.empty()) throw InvalidInput("run_step: empty batch");
  const int g = config_.group_size;
  const bool judges = config_.reward_mode != RewardMode::external_only;
  const bool scores_external = config_.reward_mode == RewardMode::ssr_x ||
                               config_.reward_mode == RewardMode::external_only;

  StepResult result;
  result.groups.reserve(batch.size());

  for (const auto& prompt : batch) {
    RolloutGroup group;
    group.prompt = prompt;
    group.actor_prompt = protocol::render_actor_prompt(prompt.tgt_lang, prompt.src_text);
    group.candidates.reserve(g);

    const uint64_t prompt_key = rng::hash_string(prompt.id);
    for (int i = 0; i < g; ++i) {
      const uint64_t seed = rng::derive_seed(config_.seed ^ prompt_key,
                                             static_cast<uint64_t>(step_index), 0xac7, i);
      group.candidates.push_back(
          backend_.generate(group.actor_prompt, config_.temp_gen, config_.max_gen_tokens, seed));
    }

    for (int i = 0; i < g; ++i) {
      auto verdict = protocol::check_format(group.candidates[i].text);
      group.answers.push_back(verdict.ok ? protocol::extract_answer(group.candidates[i].text)
                                         : std::string());
      group.verdicts.push_back(std::move(verdict));
    }

    // Malformed candidates skip judging entirely; the gate zeroes them anyway.
    group.judgments.resize(g);
    if (judges) {
      auto& judge = judge_for_mode();
      for (int i = 0; i < g; ++i) {
        if (!group.verdicts[i].ok) continue;
        const auto judge_prompt = protocol::render_judge_prompt(
            prompt.src_lang, prompt.tgt_lang, prompt.src_text, group.answers[i],
            config_.judge_with_reference ? prompt.ref_text : std::nullopt);
        const uint64_t seed = rng::derive_seed(config_.seed ^ prompt_key,
                                               static_cast<uint64_t>(step_index), 0x10d6e, i);
        const auto reply =
            judge.generate(judge_prompt, config_.temp_judge, config_.max_gen_tokens, seed);
        group.judgments[i] = protocol::parse_score(reply.text);
      }
    }

    group.rewards.reserve(g);
    std::vector<double> r_all(g, 0.0);
    for (int i = 0; i < g; ++i) {
      std::optional<double> r_ext;
      if (scores_external && group.verdicts[i].ok)
        r_ext = scorer_->score(prompt.src_text, group.answers[i], prompt.ref_text);
      group.rewards.push_back(rewards::make_breakdown(group.verdicts[i], group.judgments[i], r_ext));
      r_all[i] = group.rewards.back().r_all;
    }
    group.advantages = grpo::group_advantages(r_all, config_.grpo.sigma_min);
    result.groups.push_back(std::move(group));
  }

  // Metrics describe the pre-update policy.
  MetricsRow& m = result.metrics;
  m.step = step_index;
  size_t total = 0, ok_count = 0, answer_tokens = 0;
  for (const auto& group : result.groups) {
    for (size_t i = 0; i < group.candidates.size(); ++i) {
      ++total;
      m.mean_r_all += group.rewards[i].r_all;
      m.mean_r_self += group.rewards[i].r_self;
      if (group.verdicts[i].ok) {
        ++ok_count;
        answer_tokens += text::split_tokens(group.answers[i]).size();
      }
    }
  }
  m.mean_r_all /= static_cast<double>(total);
  m.mean_r_self /= static_cast<double>(total);
  m.format_rate = static_cast<double>(ok_count) / static_cast<double>(total);
  m.mean_answer_tokens =
      ok_count ? static_cast<double>(answer_tokens) / static_cast<double>(ok_count) : 0.0;

  // Phase barrier: every reward above came from the pre-update parameters.
  if (backend_.capabilities().can_train) apply_update(result.groups, m);
  return result;
}

void SsrTrainer::apply_update(std::vector<RolloutGroup>& groups, MetricsRow& metrics) {
  auto* toy = dynamic_cast<policy::ToyPolicy*>(&backend_);
  if (toy == nullptr)
    throw UnsupportedBackend("backend claims can_train but is not the differentiable toy policy");

  std::vector<grpo::GradientGroup> grad_groups;
  grad_groups.reserve(groups.size());
  for (const auto& group : groups) {
    grpo::GradientGroup gg;
    gg.actor_prompt = group.actor_prompt;
    gg.advantages = group.advantages;
    gg.logp_old.policy = "theta_old";
    for (const auto& cand : group.candidates) {
      if (!cand.token_logprobs)
        throw InvalidInput("trainable backend produced a candidate without log-probabilities");
      gg.completions.push_back(cand.text);
      gg.logp_old.per_candidate.push_back(*cand.token_logprobs);
    }
    grad_groups.push_back(std::move(gg));
  }

  double norm_sum = 0.0;
  for (int inner = 0; inner < config_.grpo.inner_updates; ++inner) {
    auto grad = grpo::grpo_gradient(*toy, grad_groups, config_.grpo, ref_policy_.get(),
                                    config_.temp_gen);
    grad.scale(-1.0);  // ascend the objective
    norm_sum += grad.l2_norm();
    toy->apply_gradient(grad, config_.learning_rate);
  }
  metrics.grad_norm = norm_sum / static_cast<double>(config_.grpo.inner_updates);
}

TrainResult SsrTrainer::train(std::span<const protocol::TranslationPrompt> prompts,
                              const TrainOptions& options) {
  validate(prompts);
  std::filesystem::create_directories(options.out_dir);

  const int64_t n = static_cast<int64_t>(prompts.size());
  const int64_t steps_per_epoch = (n + config_.batch_size - 1) / config_.batch_size;
  const int64_t total_steps = steps_per_epoch * config_.epochs;
  const int64_t first_step = options.resume_from_step + 1;
  const int64_t last_step =
      options.stop_after_step > 0 ? std::min<int64_t>(options.stop_after_step, total_steps)
                                  : total_steps;

  const auto metrics_path = options.out_dir / "metrics.csv";
  const auto rollout_path = options.out_dir / "rollouts.jsonl";
  const bool append = options.resume_from_step > 0;
  std::ofstream metrics_out(metrics_path, append ? std::ios::app : std::ios::trunc);
  std::ofstream rollout_out(rollout_path, append ? std::ios::app : std::ios::trunc);
  if (!metrics_out || !rollout_out)
    throw std::runtime_error("cannot open output files under " + options.out_dir.string());
  if (!append) metrics_out << metrics_csv_header() << '\n';

  const bool trainable = backend_.capabilities().can_train;
  auto* toy = dynamic_cast<policy::ToyPolicy*>(&backend_);

  TrainResult result;
  result.total_steps = total_steps;
  result.final_step = options.resume_from_step;

  std::vector<size_t> order(prompts.size());
  int64_t order_epoch = -1;
  MetricsRow last_row;

  auto save_ckpt = [&](int64_t step, const MetricsRow& row) {
    if (!trainable || toy == nullptr) return;
    std::ostringstream name;
    name << "checkpoint_" << std::setw(6) << std::setfill('0') << step << ".ssrck";
    const auto path = options.out_dir / name.str();
    Checkpoint ckpt;
    ckpt.step = step;
    ckpt.vocab = toy->vocab();
    ckpt.params = toy->params();
    ckpt.config_hash = options.config_hash;
    ckpt.running = {row.step, row.mean_r_all, row.mean_r_self, row.format_rate,
                    row.mean_answer_tokens, row.grad_norm};
    save_checkpoint(path, ckpt);
    result.checkpoints.push_back({step, path});
  };

  for (int64_t step = first_step; step <= last_step; ++step) {
    const int64_t epoch = (step - 1) / steps_per_epoch;
    if (epoch != order_epoch) {
      // Per-epoch reshuffle with a seed derived from (run seed, epoch), so a
      // resumed run rebuilds the exact same visit order.
      std::iota(order.begin(), order.end(), size_t{0});
      rng::Rng shuffle_rng(rng::derive_seed(config_.seed, 0xe90c, static_cast<uint64_t>(epoch)));
      rng::shuffle(order, shuffle_rng);
      order_epoch = epoch;
    }
    const int64_t pos = ((step - 1) % steps_per_epoch) * config_.batch_size;
    const int64_t count = std::min<int64_t>(config_.batch_size, n - pos);
    std::vector<protocol::TranslationPrompt> batch;
    batch.reserve(count);
    for (int64_t k = 0; k < count; ++k) batch.push_back(prompts[order[pos + k]]);

    StepResult sr = run_step(batch, step);
    metrics_out << to_csv(sr.metrics) << '\n';
    metrics_out.flush();
    export_rollout_groups(rollout_out, sr.groups, step);
    rollout_out.flush();
    if (!metrics_out || !rollout_out) throw std::runtime_error("output write failed; aborting run");

    last_row = sr.metrics;
    result.metrics.push_back(sr.metrics);
    result.final_step = step;
    if (config_.checkpoint_every > 0 && step % config_.checkpoint_every == 0)
      save_ckpt(step, last_row);
  }

  if (result.final_step == last_step &&
      (config_.checkpoint_every <= 0 || last_step % config_.checkpoint_every != 0))
    save_ckpt(last_step, last_row);

  return result;
}

int64_t select_best_checkpoint(std::span<const std::pair<int64_t, double>> reports) {
  if (reports.empty()) throw InvalidInput("select_best_checkpoint: no reports");
  std::vector<std::pair<int64_t, double>> sorted(reports.begin(), reports.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  int64_t best_step = sorted.front().first;
  double best_score = sorted.front().second;
  for (const auto& [step, score] : sorted)
    if (score > best_score) {
      best_score = score;
      best_step = step;
    }
  return best_step;
}

}  // namespace ssr::train
