#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "ssr/http_backend.hpp"
#include "ssr/http_scorer.hpp"
#include "ssr/toy_policy.hpp"
#include "ssr/trainer.hpp"

namespace ssr::config {

enum class BackendKind { toy, http };
enum class ScorerChoice { none, oracle_ref, oracle_free, http };

// Everything a training run needs, loadable from a JSON file. Unknown keys
// are rejected; missing keys take the documented defaults (toy-scale
// defaults when backend is "toy").
struct RunConfig {
  BackendKind backend = BackendKind::toy;
  uint64_t seed = 0;

  std::filesystem::path train_corpus;
  std::filesystem::path test_corpus;
  std::filesystem::path cipher_path;
  std::filesystem::path out_dir = "out";

  train::TrainConfig train;
  policy::ToyInit policy_init;

  ScorerChoice scorer = ScorerChoice::none;
  external::HttpScorerConfig http_scorer;
  policy::HttpBackendConfig http_backend;
};

RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const RunConfig& config);

// FNV-1a hash of the canonical JSON rendering; recorded in checkpoints, eval
// reports, and the effective-config file written next to run outputs.
std::string config_hash(const RunConfig& config);

void write_effective_config(const RunConfig& config, const std::filesystem::path& out_dir);

std::string_view to_string(BackendKind kind);
std::string_view to_string(ScorerChoice choice);

}  // namespace ssr::config
