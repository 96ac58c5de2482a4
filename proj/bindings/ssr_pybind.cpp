#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <optional>

#include "ssr/checkpoint.hpp"
#include "ssr/errors.hpp"
#include "ssr/evalharness.hpp"
#include "ssr/external.hpp"
#include "ssr/grpo.hpp"
#include "ssr/protocol.hpp"
#include "ssr/rewards.hpp"
#include "ssr/task.hpp"
#include "ssr/toy_policy.hpp"
#include "ssr/trainer.hpp"

namespace py = pybind11;
using namespace ssr;

namespace {

grpo::LogprobTrace as_trace(const std::vector<std::vector<double>>& values) {
  grpo::LogprobTrace t;
  t.per_candidate = values;
  return t;
}

py::dict report_to_dict(const evalharness::EvalReport& r) {
  py::dict d;
  d["backend"] = r.backend_identity;
  py::list dirs;
  for (const auto& dir : r.directions) {
    py::dict e;
    e["direction"] = dir.direction;
    e["n"] = dir.n;
    e["ref_based"] = dir.ref_based;
    e["ref_free"] = dir.ref_free;
    e["ref_based_stripped"] = dir.ref_based_stripped;
    e["ref_free_stripped"] = dir.ref_free_stripped;
    e["exact_match"] = dir.exact_match;
    dirs.append(e);
  }
  d["directions"] = dirs;
  d["aggregated"] = r.aggregated;
  d["aggregated_stripped"] = r.aggregated_stripped;
  d["exact_match"] = r.exact_match;
  d["format_rate"] = r.format_rate;
  d["quote_rate"] = r.quote_rate;
  d["mean_answer_tokens"] = r.mean_answer_tokens;
  d["n_prompts"] = r.n_prompts;
  d["n_evaluated"] = r.n_evaluated;
  return d;
}

std::unique_ptr<external::ExternalScorer> scorer_by_name(const std::string& name,
                                                         const std::optional<task::CipherSpec>& cipher) {
  if (name == "none") return nullptr;
  if (name == "oracle_ref") return std::make_unique<external::OracleRefScorer>();
  if (name == "oracle_free") {
    if (!cipher) throw InvalidInput("oracle_free scorer needs a cipher");
    return std::make_unique<external::OracleFreeScorer>(*cipher);
  }
  throw InvalidInput("unknown scorer: " + name + " (expected none|oracle_ref|oracle_free)");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Self-rewarding GRPO training harness: prompt protocol, reward shaping, "
            "group-relative advantages, the differentiable toy translation policy, and "
            "the training/evaluation loops.";
  m.attr("__version__") = "0.1.0";
  m.attr("TEMPLATE_VERSION") = std::string(protocol::kTemplateVersion);

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ProtocolMismatch>(m, "ProtocolMismatch", PyExc_ValueError);
  py::register_exception<InvalidCompletion>(m, "InvalidCompletion", PyExc_ValueError);
  py::register_exception<UnsupportedBackend>(m, "UnsupportedBackend", PyExc_RuntimeError);

  // --- protocol ---
  py::class_<protocol::TranslationPrompt>(m, "TranslationPrompt")
      .def(py::init([](std::string id, std::string src_lang, std::string tgt_lang,
                       std::string src_text, std::optional<std::string> ref_text) {
             return protocol::TranslationPrompt{std::move(id), std::move(src_lang),
                                                std::move(tgt_lang), std::move(src_text),
                                                std::move(ref_text)};
           }),
           py::arg("id"), py::arg("src_lang"), py::arg("tgt_lang"), py::arg("src_text"),
           py::arg("ref_text") = std::nullopt)
      .def_readwrite("id", &protocol::TranslationPrompt::id)
      .def_readwrite("src_lang", &protocol::TranslationPrompt::src_lang)
      .def_readwrite("tgt_lang", &protocol::TranslationPrompt::tgt_lang)
      .def_readwrite("src_text", &protocol::TranslationPrompt::src_text)
      .def_readwrite("ref_text", &protocol::TranslationPrompt::ref_text);

  py::class_<protocol::FormatVerdict>(m, "FormatVerdict")
      .def_readonly("ok", &protocol::FormatVerdict::ok)
      .def_readonly("answer_span", &protocol::FormatVerdict::answer_span)
      .def_property_readonly("failure_reason",
                             [](const protocol::FormatVerdict& v) -> std::optional<std::string> {
                               if (!v.failure_reason) return std::nullopt;
                               return std::string(protocol::to_string(*v.failure_reason));
                             })
      .def("__repr__", [](const protocol::FormatVerdict& v) {
        return v.ok ? std::string("FormatVerdict(ok)")
                    : "FormatVerdict(" + std::string(protocol::to_string(*v.failure_reason)) + ")";
      });

  py::class_<protocol::Judgment>(m, "Judgment")
      .def_readonly("raw_text", &protocol::Judgment::raw_text)
      .def_readonly("score", &protocol::Judgment::score)
      .def_readonly("parse_ok", &protocol::Judgment::parse_ok);

  m.def("render_actor_prompt", &protocol::render_actor_prompt, py::arg("tgt_lang"),
        py::arg("src_text"));
  m.def("render_judge_prompt", &protocol::render_judge_prompt, py::arg("src_lang"),
        py::arg("tgt_lang"), py::arg("src_text"), py::arg("translated_text"),
        py::arg("ref_text") = std::nullopt);
  m.def("check_format", &protocol::check_format, py::arg("response_text"));
  m.def("extract_answer", &protocol::extract_answer, py::arg("response_text"));
  m.def("parse_score", &protocol::parse_score, py::arg("judge_response_text"));

  // --- rewards ---
  m.def("compute_format_reward", &rewards::compute_format_reward, py::arg("verdict"));
  m.def("compute_self_reward", &rewards::compute_self_reward, py::arg("judgment"));
  m.def("combine_rewards", &rewards::combine, py::arg("r_format"), py::arg("r_self"),
        py::arg("r_external") = std::nullopt);

  // --- grpo ---
  py::class_<grpo::AdvantageSet>(m, "AdvantageSet")
      .def_readonly("values", &grpo::AdvantageSet::values)
      .def_readonly("group_mean", &grpo::AdvantageSet::group_mean)
      .def_readonly("group_std", &grpo::AdvantageSet::group_std);

  py::class_<grpo::GrpoConfig>(m, "GrpoConfig")
      .def(py::init([](double epsilon, double beta, double entropy_coef, std::string ratio_level,
                       double sigma_min, int inner_updates) {
             grpo::GrpoConfig cfg;
             cfg.epsilon = epsilon;
             cfg.beta = beta;
             cfg.entropy_coef = entropy_coef;
             if (ratio_level == "token")
               cfg.ratio_level = grpo::RatioLevel::token;
             else if (ratio_level == "sequence")
               cfg.ratio_level = grpo::RatioLevel::sequence;
             else
               throw InvalidInput("ratio_level must be 'token' or 'sequence'");
             cfg.sigma_min = sigma_min;
             cfg.inner_updates = inner_updates;
             return cfg;
           }),
           py::arg("epsilon") = 0.2, py::arg("beta") = 0.0, py::arg("entropy_coef") = 0.0,
           py::arg("ratio_level") = "token", py::arg("sigma_min") = 1e-8,
           py::arg("inner_updates") = 1)
      .def_readwrite("epsilon", &grpo::GrpoConfig::epsilon)
      .def_readwrite("beta", &grpo::GrpoConfig::beta)
      .def_readwrite("entropy_coef", &grpo::GrpoConfig::entropy_coef)
      .def_readwrite("sigma_min", &grpo::GrpoConfig::sigma_min)
      .def_readwrite("inner_updates", &grpo::GrpoConfig::inner_updates);

  m.def(
      "group_advantages",
      [](const std::vector<double>& rewards, double sigma_min) {
        return grpo::group_advantages(rewards, sigma_min);
      },
      py::arg("rewards"), py::arg("sigma_min") = 1e-8);
  m.def(
      "clipped_surrogate",
      [](const std::vector<std::vector<double>>& lp_new,
         const std::vector<std::vector<double>>& lp_old, const grpo::AdvantageSet& advantages,
         const grpo::GrpoConfig& config,
         const std::optional<std::vector<std::vector<double>>>& lp_ref) {
        if (lp_ref) {
          const auto ref = as_trace(*lp_ref);
          return grpo::clipped_surrogate(as_trace(lp_new), as_trace(lp_old), advantages, config,
                                         &ref);
        }
        return grpo::clipped_surrogate(as_trace(lp_new), as_trace(lp_old), advantages, config);
      },
      py::arg("lp_new"), py::arg("lp_old"), py::arg("advantages"),
      py::arg("config") = grpo::GrpoConfig{}, py::arg("lp_ref") = std::nullopt);
  m.def(
      "kl_penalty",
      [](const std::vector<std::vector<double>>& lp_theta,
         const std::vector<std::vector<double>>& lp_ref) {
        return grpo::kl_penalty(as_trace(lp_theta), as_trace(lp_ref));
      },
      py::arg("lp_theta"), py::arg("lp_ref"));

  // --- task ---
  py::class_<task::CipherSpec>(m, "CipherSpec")
      .def_readonly("lang_src", &task::CipherSpec::lang_src)
      .def_readonly("lang_tgt", &task::CipherSpec::lang_tgt)
      .def_readonly("v_src", &task::CipherSpec::v_src)
      .def_readonly("v_tgt", &task::CipherSpec::v_tgt)
      .def_readonly("mapping", &task::CipherSpec::mapping)
      .def_readonly("seed", &task::CipherSpec::seed)
      .def("translate", &task::CipherSpec::translate, py::arg("sentence"));

  py::class_<task::Corpus>(m, "Corpus")
      .def_readonly("monolingual", &task::Corpus::monolingual)
      .def_readonly("train", &task::Corpus::train)
      .def_readonly("test", &task::Corpus::test);

  m.def("gen_corpus", &task::gen_corpus, py::arg("seed"), py::arg("vocab_size"),
        py::arg("n_pairs"), py::arg("len_min"), py::arg("len_max"),
        py::arg("test_fraction") = 0.1);
  m.def("write_prompts_jsonl",
        [](const std::filesystem::path& path, const std::vector<protocol::TranslationPrompt>& ps) {
          task::write_prompts_jsonl(path, ps);
        });
  m.def("read_prompts_jsonl", &task::read_prompts_jsonl, py::arg("path"));
  m.def("write_cipher_json", &task::write_cipher_json, py::arg("path"), py::arg("cipher"));
  m.def("read_cipher_json", &task::read_cipher_json, py::arg("path"));

  // --- external oracles ---
  m.def("oracle_ref_score", &external::oracle_ref_score, py::arg("src_text"), py::arg("mt_text"),
        py::arg("ref_text"));
  m.def("oracle_free_score", &external::oracle_free_score, py::arg("src_text"), py::arg("mt_text"),
        py::arg("cipher"));

  // --- toy policy ---
  py::class_<policy::GenerationResult>(m, "GenerationResult")
      .def_readonly("text", &policy::GenerationResult::text)
      .def_readonly("token_logprobs", &policy::GenerationResult::token_logprobs)
      .def_readonly("seed_used", &policy::GenerationResult::seed_used);

  py::class_<policy::ToyInit>(m, "ToyInit")
      .def(py::init([](double translation_prior, double format_prob, double quote_prob) {
             return policy::ToyInit{translation_prior, format_prob, quote_prob};
           }),
           py::arg("translation_prior") = 1.0, py::arg("format_prob") = 0.5,
           py::arg("quote_prob") = 0.1)
      .def_readwrite("translation_prior", &policy::ToyInit::translation_prior)
      .def_readwrite("format_prob", &policy::ToyInit::format_prob)
      .def_readwrite("quote_prob", &policy::ToyInit::quote_prob);

  py::class_<policy::ToyPolicy>(m, "ToyPolicy")
      .def_static("from_cipher", &policy::ToyPolicy::from_cipher, py::arg("cipher"),
                  py::arg("init") = policy::ToyInit{})
      .def("identity", &policy::ToyPolicy::identity)
      .def("generate", &policy::ToyPolicy::generate, py::arg("prompt_text"),
           py::arg("temperature"), py::arg("max_tokens"), py::arg("seed") = std::nullopt)
      .def("act", &policy::ToyPolicy::act, py::arg("actor_prompt"), py::arg("temperature"),
           py::arg("max_tokens"), py::arg("seed") = std::nullopt)
      .def("judge", &policy::ToyPolicy::judge, py::arg("judge_prompt"))
      .def("score_logprobs", &policy::ToyPolicy::score_logprobs, py::arg("prompt_text"),
           py::arg("completion_text"), py::arg("temperature") = 1.0)
      .def_property_readonly(
          "format_logit", [](const policy::ToyPolicy& p) { return p.params().format_logit; })
      .def_property_readonly(
          "quote_logit", [](const policy::ToyPolicy& p) { return p.params().quote_logit; });

  m.def(
      "load_policy",
      [](const std::filesystem::path& path) {
        auto ckpt = train::load_checkpoint(path);
        py::dict meta;
        meta["step"] = ckpt.step;
        meta["config_hash"] = ckpt.config_hash;
        return py::make_tuple(policy::ToyPolicy(ckpt.vocab, ckpt.params), meta);
      },
      py::arg("path"), "Load a checkpoint file into a ToyPolicy, returning (policy, meta)");

  // --- training ---
  py::class_<train::TrainConfig>(m, "TrainConfig")
      .def(py::init([](int batch_size, int group_size, int epochs, double temp_gen,
                       double temp_judge, int max_gen_tokens, int checkpoint_every,
                       const std::string& reward_mode, bool judge_with_reference,
                       double learning_rate, const grpo::GrpoConfig& grpo_config, uint64_t seed) {
             train::TrainConfig cfg = train::TrainConfig::toy_defaults();
             cfg.batch_size = batch_size;
             cfg.group_size = group_size;
             cfg.epochs = epochs;
             cfg.temp_gen = temp_gen;
             cfg.temp_judge = temp_judge;
             cfg.max_gen_tokens = max_gen_tokens;
             cfg.checkpoint_every = checkpoint_every;
             cfg.reward_mode = train::reward_mode_from_string(reward_mode);
             cfg.judge_with_reference = judge_with_reference;
             cfg.learning_rate = learning_rate;
             cfg.grpo = grpo_config;
             cfg.seed = seed;
             return cfg;
           }),
           py::arg("batch_size") = 32, py::arg("group_size") = 8, py::arg("epochs") = 4,
           py::arg("temp_gen") = 1.0, py::arg("temp_judge") = 0.0, py::arg("max_gen_tokens") = 64,
           py::arg("checkpoint_every") = 20, py::arg("reward_mode") = "ssr",
           py::arg("judge_with_reference") = false, py::arg("learning_rate") = 10.0,
           py::arg("grpo") = grpo::GrpoConfig{}, py::arg("seed") = 0)
      .def_readwrite("batch_size", &train::TrainConfig::batch_size)
      .def_readwrite("group_size", &train::TrainConfig::group_size)
      .def_readwrite("epochs", &train::TrainConfig::epochs)
      .def_readwrite("learning_rate", &train::TrainConfig::learning_rate)
      .def_readwrite("seed", &train::TrainConfig::seed);

  m.def(
      "run_training",
      [](policy::ToyPolicy& policy, const std::vector<protocol::TranslationPrompt>& prompts,
         const train::TrainConfig& config, const std::filesystem::path& out_dir,
         const std::string& scorer, const std::optional<task::CipherSpec>& cipher,
         int64_t resume_from_step) {
        auto scorer_impl = scorer_by_name(scorer, cipher);
        train::SsrTrainer trainer(policy, config, scorer_impl.get());
        train::TrainOptions options;
        options.out_dir = out_dir;
        options.resume_from_step = resume_from_step;
        const auto result = trainer.train(prompts, options);
        py::dict out;
        out["final_step"] = result.final_step;
        out["total_steps"] = result.total_steps;
        py::list ckpts;
        for (const auto& c : result.checkpoints) {
          py::dict e;
          e["step"] = c.step;
          e["path"] = c.path.string();
          ckpts.append(e);
        }
        out["checkpoints"] = ckpts;
        py::list rows;
        for (const auto& r : result.metrics) {
          py::dict e;
          e["step"] = r.step;
          e["mean_r_all"] = r.mean_r_all;
          e["mean_r_self"] = r.mean_r_self;
          e["format_rate"] = r.format_rate;
          e["mean_answer_tokens"] = r.mean_answer_tokens;
          e["grad_norm"] = r.grad_norm;
          rows.append(e);
        }
        out["metrics"] = rows;
        return out;
      },
      py::arg("policy"), py::arg("prompts"), py::arg("config"), py::arg("out_dir"),
      py::arg("scorer") = "none", py::arg("cipher") = std::nullopt,
      py::arg("resume_from_step") = 0,
      "Run the self-rewarding training loop; writes metrics.csv, rollouts.jsonl, and "
      "checkpoints under out_dir and returns a summary dict.");

  m.def(
      "evaluate",
      [](policy::ToyPolicy& policy, const std::vector<protocol::TranslationPrompt>& prompts,
         const task::CipherSpec& cipher, double temperature, int max_tokens) {
        return report_to_dict(evalharness::evaluate(policy, prompts, cipher, temperature, max_tokens));
      },
      py::arg("policy"), py::arg("prompts"), py::arg("cipher"), py::arg("temperature") = 0.0,
      py::arg("max_tokens") = 64);

  m.def("detect_extraneous_quotes", &evalharness::detect_extraneous_quotes,
        py::arg("answer_text"));
  m.def(
      "select_best_checkpoint",
      [](const std::vector<std::pair<int64_t, double>>& reports) {
        return train::select_best_checkpoint(reports);
      },
      py::arg("reports"), "reports: list of (step, aggregated_score) pairs");
}
