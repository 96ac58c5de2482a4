#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace ssr::protocol {

// Version tag of the prompt templates under assets/prompts/; recorded in
// rollout exports so downstream consumers can tell which wording produced
// a given judgment.
inline constexpr std::string_view kTemplateVersion = "v1";

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";

// One training/eval example. ref_text is carried for reference-based scoring
// and never shown to the actor.
struct TranslationPrompt {
  std::string id;
  std::string src_lang;
  std::string tgt_lang;
  std::string src_text;
  std::optional<std::string> ref_text;
};

enum class FormatFailure {
  missing_think,
  missing_answer,
  wrong_order,
  duplicate_tags,
  extra_text,
  empty_answer,
};

std::string_view to_string(FormatFailure f);

// Verdict of the think/answer gate. answer_span is a [begin, end) byte range
// into the checked response covering the trimmed answer payload.
struct FormatVerdict {
  bool ok = false;
  std::optional<std::pair<size_t, size_t>> answer_span;
  std::optional<FormatFailure> failure_reason;
};

struct Judgment {
  std::string raw_text;
  std::optional<double> score;  // in [0, 100] when present
  bool parse_ok = false;
};

// Renders the translation request. Throws InvalidInput on empty src_text.
std::string render_actor_prompt(std::string_view tgt_lang, std::string_view src_text);

// Renders the scoring request for one candidate translation. translated_text
// must be the extracted answer payload, never a full think/answer response.
// Passing ref_text selects the with-reference template variant. Literal
// think/answer tags inside translated_text are entity-escaped so a hostile
// candidate cannot forge response structure inside the prompt.
std::string render_judge_prompt(std::string_view src_lang, std::string_view tgt_lang,
                                std::string_view src_text, std::string_view translated_text,
                                const std::optional<std::string>& ref_text = std::nullopt);

// The gate: exactly one <think> block then one <answer> block with nonempty
// payload, nothing but whitespace outside them. Never throws; every input
// yields a verdict.
FormatVerdict check_format(std::string_view response_text);

// Trimmed answer payload of a format-ok response. Throws FormatError otherwise.
std::string extract_answer(std::string_view response_text);

// Applies the same format gate to a judge response, then reads the first
// decimal number token inside the answer payload, clamped to [0, 100].
// Failures are reported through parse_ok, never thrown.
Judgment parse_score(std::string_view judge_response_text);

// Inverse renderers. Backends that emulate a model use these to recover the
// request fields; they return nullopt when the text does not match the
// corresponding template (single-line field values only).
struct ActorFields {
  std::string tgt_lang;
  std::string src_text;
};

struct JudgeFields {
  std::string src_lang;
  std::string tgt_lang;
  std::string src_text;
  std::string translated_text;
  std::optional<std::string> ref_text;
};

std::optional<ActorFields> parse_actor_prompt(std::string_view prompt_text);
std::optional<JudgeFields> parse_judge_prompt(std::string_view prompt_text);

const std::string& actor_template();
const std::string& judge_template();
const std::string& judge_with_ref_template();

}  // namespace ssr::protocol
