#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ssr/policy.hpp"
#include "ssr/protocol.hpp"
#include "ssr/task.hpp"

namespace ssr::evalharness {

// Per-direction oracle means. Malformed generations score 0 on both metrics.
struct DirectionStats {
  std::string direction;  // "Alpha->Beta"
  int n = 0;
  double ref_based = 0.0;
  double ref_free = 0.0;
  double ref_based_stripped = 0.0;  // after removing an enclosing quote pair
  double ref_free_stripped = 0.0;
  double exact_match = 0.0;
};

struct EvalReport {
  std::vector<DirectionStats> directions;
  double aggregated = 0.0;           // mean of the direction x metric cells (raw)
  double aggregated_stripped = 0.0;  // same, with quote-stripped answers
  double exact_match = 0.0;
  double format_rate = 0.0;
  double quote_rate = 0.0;           // fraction of format-ok answers that are quote-wrapped
  double mean_answer_tokens = 0.0;
  int n_prompts = 0;
  int n_evaluated = 0;  // < n_prompts when the backend failed on some prompts
  std::string backend_identity;
  std::string config_hash;  // of the training run that produced the checkpoint
};

// True iff the answer starts and ends with a matching double-quote pair,
// straight ("...") or typographic curly. The task's references never contain
// quotes, so a wrapped answer always signals the wrapping pathology.
bool detect_extraneous_quotes(std::string_view answer_text);

// The answer without its enclosing pair, or nullopt when not wrapped.
std::optional<std::string> strip_enclosing_quotes(std::string_view answer_text);

// Greedy-decodes every test prompt and scores the extracted answers with
// both oracles. Backend errors skip the prompt and lower n_evaluated.
EvalReport evaluate(policy::PolicyBackend& backend,
                    std::span<const protocol::TranslationPrompt> test_prompts,
                    const task::CipherSpec& cipher, double temperature = 0.0,
                    int max_tokens = 64);

nlohmann::ordered_json to_json(const EvalReport& report);
void print_table(std::ostream& out, const EvalReport& report);

}  // namespace ssr::evalharness
