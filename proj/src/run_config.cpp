#include "ssr/run_config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "ssr/errors.hpp"
#include "ssr/random.hpp"

namespace ssr::config {
namespace {

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                const std::string& scope) {
  if (!j.is_object()) throw InvalidInput("config: " + scope + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw InvalidInput("config: unknown key \"" + key + "\" in " + scope);
}

grpo::RatioLevel ratio_level_from_string(const std::string& s) {
  if (s == "token") return grpo::RatioLevel::token;
  if (s == "sequence") return grpo::RatioLevel::sequence;
  throw InvalidInput("config: ratio_level must be \"token\" or \"sequence\"");
}

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string_view to_string(BackendKind kind) {
  return kind == BackendKind::toy ? "toy" : "http";
}

std::string_view to_string(ScorerChoice choice) {
  switch (choice) {
    case ScorerChoice::none: return "none";
    case ScorerChoice::oracle_ref: return "oracle_ref";
    case ScorerChoice::oracle_free: return "oracle_free";
    case ScorerChoice::http: return "http";
  }
  return "none";
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  check_keys(j, {"backend", "seed", "corpus", "out_dir", "train", "grpo", "policy", "scorer",
                 "http_backend"},
             "top level");

  RunConfig cfg;
  if (j.contains("backend")) {
    const auto s = j.at("backend").get<std::string>();
    if (s == "toy")
      cfg.backend = BackendKind::toy;
    else if (s == "http")
      cfg.backend = BackendKind::http;
    else
      throw InvalidInput("config: backend must be \"toy\" or \"http\"");
  }
  if (cfg.backend == BackendKind::toy) cfg.train = train::TrainConfig::toy_defaults();

  read_if(j, "seed", cfg.seed);
  cfg.train.seed = cfg.seed;

  if (j.contains("corpus")) {
    const auto& c = j.at("corpus");
    check_keys(c, {"train", "test", "cipher"}, "corpus");
    if (c.contains("train")) cfg.train_corpus = c.at("train").get<std::string>();
    if (c.contains("test")) cfg.test_corpus = c.at("test").get<std::string>();
    if (c.contains("cipher")) cfg.cipher_path = c.at("cipher").get<std::string>();
  }
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();

  if (j.contains("train")) {
    const auto& t = j.at("train");
    check_keys(t,
               {"batch_size", "group_size", "epochs", "temp_gen", "temp_judge", "max_gen_tokens",
                "checkpoint_every", "reward_mode", "judge_with_reference", "learning_rate"},
               "train");
    read_if(t, "batch_size", cfg.train.batch_size);
    read_if(t, "group_size", cfg.train.group_size);
    read_if(t, "epochs", cfg.train.epochs);
    read_if(t, "temp_gen", cfg.train.temp_gen);
    read_if(t, "temp_judge", cfg.train.temp_judge);
    read_if(t, "max_gen_tokens", cfg.train.max_gen_tokens);
    read_if(t, "checkpoint_every", cfg.train.checkpoint_every);
    if (t.contains("reward_mode"))
      cfg.train.reward_mode = train::reward_mode_from_string(t.at("reward_mode").get<std::string>());
    read_if(t, "judge_with_reference", cfg.train.judge_with_reference);
    read_if(t, "learning_rate", cfg.train.learning_rate);
  }

  if (j.contains("grpo")) {
    const auto& g = j.at("grpo");
    check_keys(g, {"epsilon", "beta", "entropy_coef", "ratio_level", "sigma_min", "inner_updates"},
               "grpo");
    read_if(g, "epsilon", cfg.train.grpo.epsilon);
    read_if(g, "beta", cfg.train.grpo.beta);
    read_if(g, "entropy_coef", cfg.train.grpo.entropy_coef);
    if (g.contains("ratio_level"))
      cfg.train.grpo.ratio_level = ratio_level_from_string(g.at("ratio_level").get<std::string>());
    read_if(g, "sigma_min", cfg.train.grpo.sigma_min);
    read_if(g, "inner_updates", cfg.train.grpo.inner_updates);
  }

  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    check_keys(p, {"translation_prior", "format_prob", "quote_prob"}, "policy");
    read_if(p, "translation_prior", cfg.policy_init.translation_prior);
    read_if(p, "format_prob", cfg.policy_init.format_prob);
    read_if(p, "quote_prob", cfg.policy_init.quote_prob);
  }

  if (j.contains("scorer")) {
    const auto& s = j.at("scorer");
    check_keys(s,
               {"kind", "url", "auth_token_env", "timeout_ms", "retries", "backoff_ms",
                "fallback_zero", "max_concurrency"},
               "scorer");
    if (s.contains("kind")) {
      const auto kind = s.at("kind").get<std::string>();
      if (kind == "none")
        cfg.scorer = ScorerChoice::none;
      else if (kind == "oracle_ref")
        cfg.scorer = ScorerChoice::oracle_ref;
      else if (kind == "oracle_free")
        cfg.scorer = ScorerChoice::oracle_free;
      else if (kind == "http")
        cfg.scorer = ScorerChoice::http;
      else
        throw InvalidInput("config: scorer.kind must be none|oracle_ref|oracle_free|http");
    }
    read_if(s, "url", cfg.http_scorer.url);
    read_if(s, "auth_token_env", cfg.http_scorer.auth_token_env);
    read_if(s, "timeout_ms", cfg.http_scorer.timeout_ms);
    read_if(s, "retries", cfg.http_scorer.retries);
    read_if(s, "backoff_ms", cfg.http_scorer.backoff_ms);
    read_if(s, "fallback_zero", cfg.http_scorer.fallback_zero);
    read_if(s, "max_concurrency", cfg.http_scorer.max_concurrency);
  }

  if (j.contains("http_backend")) {
    const auto& h = j.at("http_backend");
    check_keys(h, {"url", "model", "auth_token_env", "timeout_ms", "retries", "backoff_ms"},
               "http_backend");
    read_if(h, "url", cfg.http_backend.url);
    read_if(h, "model", cfg.http_backend.model);
    read_if(h, "auth_token_env", cfg.http_backend.auth_token_env);
    read_if(h, "timeout_ms", cfg.http_backend.timeout_ms);
    read_if(h, "retries", cfg.http_backend.retries);
    read_if(h, "backoff_ms", cfg.http_backend.backoff_ms);
  }

  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  return run_config_from_json(j);
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["backend"] = std::string(to_string(cfg.backend));
  j["seed"] = cfg.seed;
  j["corpus"] = {{"train", cfg.train_corpus.string()},
                 {"test", cfg.test_corpus.string()},
                 {"cipher", cfg.cipher_path.string()}};
  j["out_dir"] = cfg.out_dir.string();
  j["train"] = {{"batch_size", cfg.train.batch_size},
                {"group_size", cfg.train.group_size},
                {"epochs", cfg.train.epochs},
                {"temp_gen", cfg.train.temp_gen},
                {"temp_judge", cfg.train.temp_judge},
                {"max_gen_tokens", cfg.train.max_gen_tokens},
                {"checkpoint_every", cfg.train.checkpoint_every},
                {"reward_mode", std::string(train::to_string(cfg.train.reward_mode))},
                {"judge_with_reference", cfg.train.judge_with_reference},
                {"learning_rate", cfg.train.learning_rate}};
  j["grpo"] = {{"epsilon", cfg.train.grpo.epsilon},
               {"beta", cfg.train.grpo.beta},
               {"entropy_coef", cfg.train.grpo.entropy_coef},
               {"ratio_level",
                cfg.train.grpo.ratio_level == grpo::RatioLevel::token ? "token" : "sequence"},
               {"sigma_min", cfg.train.grpo.sigma_min},
               {"inner_updates", cfg.train.grpo.inner_updates}};
  j["policy"] = {{"translation_prior", cfg.policy_init.translation_prior},
                 {"format_prob", cfg.policy_init.format_prob},
                 {"quote_prob", cfg.policy_init.quote_prob}};
  j["scorer"] = {{"kind", std::string(to_string(cfg.scorer))},
                 {"url", cfg.http_scorer.url},
                 {"auth_token_env", cfg.http_scorer.auth_token_env},
                 {"timeout_ms", cfg.http_scorer.timeout_ms},
                 {"retries", cfg.http_scorer.retries},
                 {"backoff_ms", cfg.http_scorer.backoff_ms},
                 {"fallback_zero", cfg.http_scorer.fallback_zero},
                 {"max_concurrency", cfg.http_scorer.max_concurrency}};
  j["http_backend"] = {{"url", cfg.http_backend.url},
                       {"model", cfg.http_backend.model},
                       {"auth_token_env", cfg.http_backend.auth_token_env},
                       {"timeout_ms", cfg.http_backend.timeout_ms},
                       {"retries", cfg.http_backend.retries},
                       {"backoff_ms", cfg.http_backend.backoff_ms}};
  return j;
}

std::string config_hash(const RunConfig& cfg) {
  const uint64_t h = rng::hash_string(to_json(cfg).dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

void write_effective_config(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  auto j = to_json(cfg);
  j["config_hash"] = config_hash(cfg);
  std::ofstream out(out_dir / "config.effective.json");
  if (!out) throw std::runtime_error("cannot write effective config");
  out << j.dump(2) << '\n';
}

}  // namespace ssr::config
