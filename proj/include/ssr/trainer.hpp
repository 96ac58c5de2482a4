#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ssr/checkpoint.hpp"
#include "ssr/external.hpp"
#include "ssr/grpo.hpp"
#include "ssr/policy.hpp"
#include "ssr/protocol.hpp"
#include "ssr/rewards.hpp"
#include "ssr/task.hpp"
#include "ssr/toy_policy.hpp"

namespace ssr::train {

// ssr:                1 + r_self, gated by format
// ssr_x:              1 + r_self + r_external, gated by format
// external_only:      1 + r_external, gated by format (no judging)
// llm_judge_external: 1 + score from a frozen judge backend, gated by format
enum class RewardMode { ssr, ssr_x, external_only, llm_judge_external };

std::string_view to_string(RewardMode mode);
RewardMode reward_mode_from_string(std::string_view name);

struct TrainConfig {
  int batch_size = 128;
  int group_size = 16;
  int epochs = 4;
  double temp_gen = 1.0;
  double temp_judge = 0.0;
  int max_gen_tokens = 1024;
  int checkpoint_every = 20;
  RewardMode reward_mode = RewardMode::ssr;
  bool judge_with_reference = false;
  double learning_rate = 5e-7;
  grpo::GrpoConfig grpo;
  uint64_t seed = 0;

  // Scaled-down defaults for the in-process policy, where a 7B-scale
  // learning rate would never move the table.
  static TrainConfig toy_defaults();
};

struct MetricsRow {
  int64_t step = 0;
  double mean_r_all = 0.0;
  double mean_r_self = 0.0;
  double format_rate = 0.0;
  double mean_answer_tokens = 0.0;  // over format-ok candidates
  double grad_norm = 0.0;
};

std::string metrics_csv_header();
std::string to_csv(const MetricsRow& row);

// Everything produced for one prompt in one step.
struct RolloutGroup {
  protocol::TranslationPrompt prompt;
  std::string actor_prompt;
  std::vector<policy::GenerationResult> candidates;
  std::vector<protocol::FormatVerdict> verdicts;
  std::vector<std::string> answers;  // empty string where the format gate failed
  std::vector<protocol::Judgment> judgments;
  std::vector<rewards::RewardBreakdown> rewards;
  grpo::AdvantageSet advantages;
};

struct StepResult {
  std::vector<RolloutGroup> groups;
  MetricsRow metrics;
};

struct CheckpointInfo {
  int64_t step = 0;
  std::filesystem::path path;
};

struct TrainOptions {
  std::filesystem::path out_dir;
  std::string config_hash;
  int64_t resume_from_step = 0;  // continue after this step; outputs are appended
  int64_t stop_after_step = 0;   // 0 = run to completion
};

struct TrainResult {
  int64_t final_step = 0;
  int64_t total_steps = 0;
  std::vector<CheckpointInfo> checkpoints;
  std::vector<MetricsRow> metrics;  // rows produced by this invocation
};

// One line per prompt per step:
// {"step","prompt_id","direction","src","ref"?,"candidates":[...],"template_version"}
void export_rollout_groups(std::ostream& out, std::span<const RolloutGroup> groups, int64_t step);

// Orchestrates the self-rewarding loop: a batch of translation prompts is
// rolled out into G candidates each, candidates are format-gated, surviving
// answers are scored by the judge role (or an external scorer, depending on
// reward mode), rewards are normalized into group advantages, and trainable
// backends take a GRPO step. Inference never mutates parameters; the update
// is a single-writer section at the end of each step.
class SsrTrainer {
 public:
  SsrTrainer(policy::PolicyBackend& backend, TrainConfig config,
             external::ExternalScorer* scorer = nullptr,
             policy::PolicyBackend* judge_backend = nullptr);

  StepResult run_step(std::span<const protocol::TranslationPrompt> batch, int64_t step_index);

  TrainResult train(std::span<const protocol::TranslationPrompt> prompts,
                    const TrainOptions& options);

  // Fails fast (before any rollout) when the configuration needs data the
  // prompts cannot provide.
  void validate(std::span<const protocol::TranslationPrompt> prompts) const;

  const TrainConfig& config() const { return config_; }

 private:
  policy::PolicyBackend& judge_for_mode();
  void apply_update(std::vector<RolloutGroup>& groups, MetricsRow& metrics);

  policy::PolicyBackend& backend_;
  TrainConfig config_;
  external::ExternalScorer* scorer_ = nullptr;
  policy::PolicyBackend* judge_backend_ = nullptr;
  std::unique_ptr<policy::ToyPolicy> frozen_judge_;  // snapshot for llm_judge_external
  std::unique_ptr<policy::ToyPolicy> ref_policy_;    // KL reference when beta > 0
};

// Picks the step with the highest aggregated eval score; ties go to the
// earliest step. Throws InvalidInput on an empty list.
int64_t select_best_checkpoint(std::span<const std::pair<int64_t, double>> reports);

}  // namespace ssr::train
