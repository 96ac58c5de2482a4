#include "ssr/protocol.hpp"

#include <array>
#include <charconv>
#include <regex>

#include "ssr/errors.hpp"
#include "ssr/prompt_templates.gen.hpp"
#include "ssr/textutil.hpp"

namespace ssr::protocol {
namespace {

constexpr std::array<std::pair<std::string_view, std::string_view>, 4> kTagEscapes = {{
    {"<think>", "&lt;think&gt;"},
    {"</think>", "&lt;/think&gt;"},
    {"<answer>", "&lt;answer&gt;"},
    {"</answer>", "&lt;/answer&gt;"},
}};

std::string escape_tags(std::string_view s) {
  std::string out(s);
  for (const auto& [from, to] : kTagEscapes) out = text::replace_all(out, from, to);
  return out;
}

std::string unescape_tags(std::string_view s) {
  std::string out(s);
  for (const auto& [from, to] : kTagEscapes) out = text::replace_all(out, to, from);
  return out;
}

// Single left-to-right pass: slot values are never re-scanned, so a value
// containing "{src_text}" cannot trigger a second substitution.
std::string render_template(std::string_view tmpl,
                            std::initializer_list<std::pair<std::string_view, std::string_view>> slots) {
  std::string out;
  out.reserve(tmpl.size() + 64);
  size_t i = 0;
  while (i < tmpl.size()) {
    size_t open = tmpl.find('{', i);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    size_t close = tmpl.find('}', open);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    out.append(tmpl.substr(i, open - i));
    std::string_view name = tmpl.substr(open + 1, close - open - 1);
    bool matched = false;
    for (const auto& [slot, value] : slots) {
      if (name == slot) {
        out.append(value);
        matched = true;
        break;
      }
    }
    if (!matched) out.append(tmpl.substr(open, close - open + 1));
    i = close + 1;
  }
  return out;
}

struct TagPositions {
  size_t think_open, think_close, answer_open, answer_close;
};

}  // namespace

std::string_view to_string(FormatFailure f) {
  switch (f) {
    case FormatFailure::missing_think: return "missing_think";
    case FormatFailure::missing_answer: return "missing_answer";
    case FormatFailure::wrong_order: return "wrong_order";
    case FormatFailure::duplicate_tags: return "duplicate_tags";
    case FormatFailure::extra_text: return "extra_text";
    case FormatFailure::empty_answer: return "empty_answer";
  }
  return "unknown";
}

const std::string& actor_template() {
  static const std::string t = templates::kActorTemplateV1;
  return t;
}

const std::string& judge_template() {
  static const std::string t = templates::kJudgeTemplateV1;
  return t;
}

const std::string& judge_with_ref_template() {
  static const std::string t = templates::kJudgeWithRefTemplateV1;
  return t;
}

std::string render_actor_prompt(std::string_view tgt_lang, std::string_view src_text) {
  if (text::is_all_whitespace(src_text)) throw InvalidInput("render_actor_prompt: empty src_text");
  if (tgt_lang.empty()) throw InvalidInput("render_actor_prompt: empty tgt_lang");
  return render_template(actor_template(), {{"tgt_lang", tgt_lang}, {"src_text", src_text}});
}

std::string render_judge_prompt(std::string_view src_lang, std::string_view tgt_lang,
                                std::string_view src_text, std::string_view translated_text,
                                const std::optional<std::string>& ref_text) {
  if (src_lang.empty() || tgt_lang.empty()) throw InvalidInput("render_judge_prompt: empty language tag");
  if (text::is_all_whitespace(src_text)) throw InvalidInput("render_judge_prompt: empty src_text");
  if (text::is_all_whitespace(translated_text))
    throw InvalidInput("render_judge_prompt: empty translated_text");
  std::string mt = escape_tags(translated_text);
  if (ref_text) {
    if (text::is_all_whitespace(*ref_text)) throw InvalidInput("render_judge_prompt: empty ref_text");
    std::string ref = escape_tags(*ref_text);
    return render_template(judge_with_ref_template(), {{"src_lang", src_lang},
                                                       {"tgt_lang", tgt_lang},
                                                       {"src_text", src_text},
                                                       {"translated_text", mt},
                                                       {"ref_text", ref}});
  }
  return render_template(judge_template(), {{"src_lang", src_lang},
                                            {"tgt_lang", tgt_lang},
                                            {"src_text", src_text},
                                            {"translated_text", mt}});
}

FormatVerdict check_format(std::string_view s) {
  FormatVerdict v;
  auto fail = [&](FormatFailure reason) {
    v.ok = false;
    v.failure_reason = reason;
    return v;
  };

  const size_t n_to = text::count_occurrences(s, kThinkOpen);
  const size_t n_tc = text::count_occurrences(s, kThinkClose);
  const size_t n_ao = text::count_occurrences(s, kAnswerOpen);
  const size_t n_ac = text::count_occurrences(s, kAnswerClose);

  // "</think>" contains no "<think>" (and likewise for answer), so the
  // counts above are independent.
  if (n_to > 1 || n_tc > 1 || n_ao > 1 || n_ac > 1) return fail(FormatFailure::duplicate_tags);
  if (n_to == 0 || n_tc == 0) return fail(FormatFailure::missing_think);
  if (n_ao == 0 || n_ac == 0) return fail(FormatFailure::missing_answer);

  TagPositions p{s.find(kThinkOpen), s.find(kThinkClose), s.find(kAnswerOpen), s.find(kAnswerClose)};
  if (!(p.think_open < p.think_close && p.think_close < p.answer_open &&
        p.answer_open < p.answer_close))
    return fail(FormatFailure::wrong_order);

  std::string_view before = s.substr(0, p.think_open);
  std::string_view between =
      s.substr(p.think_close + kThinkClose.size(),
               p.answer_open - (p.think_close + kThinkClose.size()));
  std::string_view after = s.substr(p.answer_close + kAnswerClose.size());
  if (!text::is_all_whitespace(before) || !text::is_all_whitespace(between) ||
      !text::is_all_whitespace(after))
    return fail(FormatFailure::extra_text);

  const size_t content_begin = p.answer_open + kAnswerOpen.size();
  std::string_view content = s.substr(content_begin, p.answer_close - content_begin);
  std::string_view payload = text::trim(content);
  if (payload.empty()) return fail(FormatFailure::empty_answer);

  const size_t payload_begin = content_begin + (payload.data() - content.data());
  v.ok = true;
  v.answer_span = {payload_begin, payload_begin + payload.size()};
  return v;
}

std::string extract_answer(std::string_view response_text) {
  FormatVerdict v = check_format(response_text);
  if (!v.ok) {
    std::string why = v.failure_reason ? std::string(to_string(*v.failure_reason)) : "unknown";
    throw FormatError("extract_answer: response fails format gate (" + why + ")");
  }
  auto [begin, end] = *v.answer_span;
  return std::string(response_text.substr(begin, end - begin));
}

Judgment parse_score(std::string_view judge_response_text) {
  Judgment j;
  j.raw_text = std::string(judge_response_text);
  FormatVerdict v = check_format(judge_response_text);
  if (!v.ok) return j;

  auto [begin, end] = *v.answer_span;
  std::string payload(judge_response_text.substr(begin, end - begin));

  static const std::regex kNumber(R"([0-9]+(\.[0-9]+)?)");
  std::smatch m;
  if (!std::regex_search(payload, m, kNumber)) return j;

  double value = 0.0;
  const std::string tok = m.str(0);
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{}) return j;

  j.score = std::min(100.0, std::max(0.0, value));
  j.parse_ok = true;
  return j;
}

namespace {

// Matches `text` against `tmpl` rendered with slot values that do not
// themselves contain the literal run following their slot. Each slot value
// is captured up to the first occurrence of the next literal; repeated
// slots must capture identical values.
std::optional<std::vector<std::pair<std::string, std::string>>> match_template(
    std::string_view tmpl, std::string_view text) {
  std::vector<std::pair<std::string, std::string>> fields;
  size_t ti = 0;  // template cursor
  size_t xi = 0;  // text cursor
  while (ti < tmpl.size()) {
    size_t open = tmpl.find('{', ti);
    std::string_view literal =
        tmpl.substr(ti, (open == std::string_view::npos ? tmpl.size() : open) - ti);
    if (text.substr(xi, literal.size()) != literal) return std::nullopt;
    xi += literal.size();
    if (open == std::string_view::npos) {
      ti = tmpl.size();
      break;
    }
    size_t close = tmpl.find('}', open);
    if (close == std::string_view::npos) return std::nullopt;
    std::string name(tmpl.substr(open + 1, close - open - 1));
    ti = close + 1;

    size_t next_open = tmpl.find('{', ti);
    std::string_view next_literal =
        tmpl.substr(ti, (next_open == std::string_view::npos ? tmpl.size() : next_open) - ti);
    size_t stop;
    if (next_literal.empty()) {
      stop = text.size();  // slot at end of template
    } else {
      stop = text.find(next_literal, xi);
      if (stop == std::string_view::npos) return std::nullopt;
    }
    std::string value(text.substr(xi, stop - xi));
    for (const auto& [k, v] : fields)
      if (k == name && v != value) return std::nullopt;
    fields.emplace_back(std::move(name), std::move(value));
    xi = stop;
  }
  if (xi != text.size()) return std::nullopt;
  return fields;
}

std::optional<std::string> lookup(const std::vector<std::pair<std::string, std::string>>& fields,
                                  std::string_view name) {
  for (const auto& [k, v] : fields)
    if (k == name) return v;
  return std::nullopt;
}

}  // namespace

std::optional<ActorFields> parse_actor_prompt(std::string_view prompt_text) {
  auto fields = match_template(actor_template(), prompt_text);
  if (!fields) return std::nullopt;
  auto tgt = lookup(*fields, "tgt_lang");
  auto src = lookup(*fields, "src_text");
  if (!tgt || !src || tgt->empty() || src->empty()) return std::nullopt;
  return ActorFields{*tgt, *src};
}

std::optional<JudgeFields> parse_judge_prompt(std::string_view prompt_text) {
  auto fields = match_template(judge_with_ref_template(), prompt_text);
  bool with_ref = fields.has_value();
  if (!with_ref) fields = match_template(judge_template(), prompt_text);
  if (!fields) return std::nullopt;
  JudgeFields out;
  auto src_lang = lookup(*fields, "src_lang");
  auto tgt_lang = lookup(*fields, "tgt_lang");
  auto src = lookup(*fields, "src_text");
  auto mt = lookup(*fields, "translated_text");
  if (!src_lang || !tgt_lang || !src || !mt) return std::nullopt;
  if (src_lang->empty() || tgt_lang->empty() || src->empty() || mt->empty()) return std::nullopt;
  out.src_lang = *src_lang;
  out.tgt_lang = *tgt_lang;
  out.src_text = *src;
  out.translated_text = unescape_tags(*mt);
  if (with_ref) {
    auto ref = lookup(*fields, "ref_text");
    if (!ref || ref->empty()) return std::nullopt;
    out.ref_text = unescape_tags(*ref);
  }
  return out;
}

}  // namespace ssr::protocol
