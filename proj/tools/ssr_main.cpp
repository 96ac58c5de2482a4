#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssr/errors.hpp"
#include "ssr/evalharness.hpp"
#include "ssr/external.hpp"
#include "ssr/http_backend.hpp"
#include "ssr/http_scorer.hpp"
#include "ssr/run_config.hpp"
#include "ssr/task.hpp"
#include "ssr/toy_policy.hpp"
#include "ssr/trainer.hpp"

namespace fs = std::filesystem;
using namespace ssr;

namespace {

struct GenDataArgs {
  uint64_t seed = 7;
  int vocab = 20;
  int pairs = 500;
  int len_min = 5;
  int len_max = 12;
  double test_fraction = 0.1;
  std::string out = "data";
};

int cmd_gen_data(const GenDataArgs& args) {
  auto [cipher, corpus] = task::gen_corpus(args.seed, args.vocab, args.pairs, args.len_min,
                                           args.len_max, args.test_fraction);
  fs::create_directories(args.out);
  const fs::path out(args.out);
  task::write_prompts_jsonl(out / "corpus.train.jsonl", corpus.train);
  task::write_prompts_jsonl(out / "corpus.test.jsonl", corpus.test);
  task::write_prompts_jsonl(out / "corpus.all.jsonl", corpus.monolingual);
  task::write_cipher_json(out / "cipher.json", cipher);
  std::cout << "wrote " << corpus.train.size() << " train / " << corpus.test.size()
            << " test prompts (" << corpus.monolingual.size() << " total) to " << args.out << "\n";
  return 0;
}

std::unique_ptr<external::ExternalScorer> make_scorer(const config::RunConfig& cfg,
                                                      const task::CipherSpec& cipher) {
  switch (cfg.scorer) {
    case config::ScorerChoice::none: return nullptr;
    case config::ScorerChoice::oracle_ref: return std::make_unique<external::OracleRefScorer>();
    case config::ScorerChoice::oracle_free:
      return std::make_unique<external::OracleFreeScorer>(cipher);
    case config::ScorerChoice::http: return std::make_unique<external::HttpScorer>(cfg.http_scorer);
  }
  return nullptr;
}

policy::ToyPolicy policy_from_checkpoint(const fs::path& path) {
  auto ckpt = train::load_checkpoint(path);
  return policy::ToyPolicy(ckpt.vocab, ckpt.params);
}

struct TrainArgs {
  std::string config_path;
  std::string reward_mode;
  std::string resume;
  std::string out;
  std::optional<uint64_t> seed;
  std::optional<int> epochs;
};

int cmd_train(const TrainArgs& args) {
  config::RunConfig cfg = config::load_run_config(args.config_path);
  if (!args.reward_mode.empty())
    cfg.train.reward_mode = train::reward_mode_from_string(args.reward_mode);
  if (!args.out.empty()) cfg.out_dir = args.out;
  if (args.seed) {
    cfg.seed = *args.seed;
    cfg.train.seed = *args.seed;
  }
  if (args.epochs) cfg.train.epochs = *args.epochs;

  if (cfg.train_corpus.empty()) throw InvalidInput("config: corpus.train is required for training");
  auto train_prompts = task::read_prompts_jsonl(cfg.train_corpus);
  task::CipherSpec cipher;
  if (!cfg.cipher_path.empty()) cipher = task::read_cipher_json(cfg.cipher_path);

  std::unique_ptr<policy::PolicyBackend> backend;
  if (cfg.backend == config::BackendKind::toy) {
    if (cfg.cipher_path.empty()) throw InvalidInput("config: corpus.cipher is required for the toy backend");
    backend = std::make_unique<policy::ToyPolicy>(policy::ToyPolicy::from_cipher(cipher, cfg.policy_init));
  } else {
    if (cfg.http_backend.url.empty()) throw InvalidInput("config: http_backend.url is required");
    backend = std::make_unique<policy::HttpBackend>(cfg.http_backend);
  }

  train::TrainOptions options;
  options.out_dir = cfg.out_dir;
  options.config_hash = config::config_hash(cfg);
  fs::create_directories(cfg.out_dir);
  config::write_effective_config(cfg, cfg.out_dir);

  if (!args.resume.empty()) {
    auto ckpt = train::load_checkpoint(args.resume);
    auto* toy = dynamic_cast<policy::ToyPolicy*>(backend.get());
    if (toy == nullptr) throw InvalidInput("--resume only applies to the toy backend");
    *toy = policy::ToyPolicy(ckpt.vocab, ckpt.params);
    options.resume_from_step = ckpt.step;
    std::cout << "resuming from step " << ckpt.step << "\n";
  }

  auto scorer = make_scorer(cfg, cipher);
  train::SsrTrainer trainer(*backend, cfg.train, scorer.get());
  auto result = trainer.train(train_prompts, options);
  std::cout << "trained " << result.final_step << "/" << result.total_steps << " steps, wrote "
            << result.checkpoints.size() << " checkpoints to " << cfg.out_dir << "\n";

  // Rank checkpoints by the aggregated oracle average on the held-out split.
  if (!result.checkpoints.empty() && !cfg.test_corpus.empty()) {
    auto test_prompts = task::read_prompts_jsonl(cfg.test_corpus);
    std::vector<std::pair<int64_t, double>> reports;
    for (const auto& info : result.checkpoints) {
      auto snapshot = policy_from_checkpoint(info.path);
      auto report = evalharness::evaluate(snapshot, test_prompts, cipher, 0.0, cfg.train.max_gen_tokens);
      std::cout << "checkpoint step " << info.step << ": aggregated " << report.aggregated << "\n";
      reports.emplace_back(info.step, report.aggregated);
    }
    const int64_t best = train::select_best_checkpoint(reports);
    std::cout << "best checkpoint: step " << best << "\n";
  }
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string testset;
  std::string cipher;
  std::string json_out;
  int max_tokens = 64;
};

int cmd_eval(const EvalArgs& args) {
  auto ckpt = train::load_checkpoint(args.checkpoint);
  policy::ToyPolicy backend(ckpt.vocab, ckpt.params);
  auto prompts = task::read_prompts_jsonl(args.testset);
  auto cipher = task::read_cipher_json(args.cipher);
  auto report = evalharness::evaluate(backend, prompts, cipher, 0.0, args.max_tokens);
  report.config_hash = ckpt.config_hash;
  evalharness::print_table(std::cout, report);
  if (!args.json_out.empty()) {
    std::ofstream out(args.json_out);
    if (!out) throw std::runtime_error("cannot write " + args.json_out);
    out << evalharness::to_json(report).dump(2) << '\n';
  }
  return 0;
}

struct JudgeArgs {
  std::string src;
  std::string mt;
  std::string src_lang;
  std::string tgt_lang;
  std::string ref;
  std::string checkpoint;
  std::string cipher;
  std::string url;
  std::string model = "default";
  bool verbose = false;
};

int cmd_judge(const JudgeArgs& args) {
  std::unique_ptr<policy::PolicyBackend> backend;
  if (!args.url.empty()) {
    policy::HttpBackendConfig hc;
    hc.url = args.url;
    hc.model = args.model;
    backend = std::make_unique<policy::HttpBackend>(hc);
  } else if (!args.checkpoint.empty()) {
    backend = std::make_unique<policy::ToyPolicy>(policy_from_checkpoint(args.checkpoint));
  } else if (!args.cipher.empty()) {
    auto cipher = task::read_cipher_json(args.cipher);
    backend = std::make_unique<policy::ToyPolicy>(policy::ToyPolicy::from_cipher(cipher));
  } else {
    throw InvalidInput("judge: provide --checkpoint, --cipher, or --url");
  }

  std::optional<std::string> ref;
  if (!args.ref.empty()) ref = args.ref;
  const auto prompt =
      protocol::render_judge_prompt(args.src_lang, args.tgt_lang, args.src, args.mt, ref);
  if (args.verbose) std::cout << "--- judge prompt ---\n" << prompt << "\n--- end prompt ---\n";

  const auto reply = backend->generate(prompt, 0.0, 256, 0);
  const auto judgment = protocol::parse_score(reply.text);
  nlohmann::ordered_json j{{"parse_ok", judgment.parse_ok}};
  if (judgment.score) j["score"] = *judgment.score;
  j["raw_text"] = judgment.raw_text;
  std::cout << j.dump(2) << "\n";
  return 0;  // an unparseable judgment is data, not a CLI failure
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-rewarding GRPO training harness for translation tasks"};
  app.require_subcommand(1);

  GenDataArgs gen_args;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic cipher-translation corpus");
  gen->add_option("--seed", gen_args.seed, "Corpus seed");
  gen->add_option("--vocab", gen_args.vocab, "Vocabulary size per language");
  gen->add_option("--pairs", gen_args.pairs, "Number of parallel pairs");
  gen->add_option("--len-min", gen_args.len_min, "Minimum sentence length");
  gen->add_option("--len-max", gen_args.len_max, "Maximum sentence length");
  gen->add_option("--test-fraction", gen_args.test_fraction, "Held-out fraction of pairs");
  gen->add_option("--out", gen_args.out, "Output directory");

  TrainArgs train_args;
  auto* tr = app.add_subcommand("train", "Run self-rewarding GRPO training");
  tr->add_option("--config", train_args.config_path, "Run config JSON")->required();
  tr->add_option("--reward-mode", train_args.reward_mode,
                 "Override: ssr|ssr_x|external_only|llm_judge_external");
  tr->add_option("--resume", train_args.resume, "Checkpoint to resume from");
  tr->add_option("--out", train_args.out, "Override output directory");
  uint64_t seed_flag = 0;
  auto* seed_opt = tr->add_option("--seed", seed_flag, "Override seed");
  int epochs_flag = 0;
  auto* epochs_opt = tr->add_option("--epochs", epochs_flag, "Override epoch count");

  EvalArgs eval_args;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a test set");
  ev->add_option("--checkpoint", eval_args.checkpoint)->required();
  ev->add_option("--testset", eval_args.testset)->required();
  ev->add_option("--cipher", eval_args.cipher)->required();
  ev->add_option("--json", eval_args.json_out, "Also write the report as JSON");
  ev->add_option("--max-tokens", eval_args.max_tokens);

  JudgeArgs judge_args;
  auto* jd = app.add_subcommand("judge", "Score one translation with the judge role");
  jd->add_option("--src", judge_args.src)->required();
  jd->add_option("--mt", judge_args.mt)->required();
  jd->add_option("--src-lang", judge_args.src_lang)->required();
  jd->add_option("--tgt-lang", judge_args.tgt_lang)->required();
  jd->add_option("--ref", judge_args.ref, "Reference translation (with-reference judging)");
  jd->add_option("--checkpoint", judge_args.checkpoint, "Toy policy checkpoint");
  jd->add_option("--cipher", judge_args.cipher, "Cipher JSON (fresh toy policy)");
  jd->add_option("--url", judge_args.url, "Remote chat-completions endpoint");
  jd->add_option("--model", judge_args.model, "Remote model name");
  jd->add_flag("--verbose", judge_args.verbose, "Echo the rendered judge prompt");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen_data(gen_args);
    if (*tr) {
      if (!seed_opt->empty()) train_args.seed = seed_flag;
      if (!epochs_opt->empty()) train_args.epochs = epochs_flag;
      return cmd_train(train_args);
    }
    if (*ev) return cmd_eval(eval_args);
    if (*jd) return cmd_judge(judge_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
