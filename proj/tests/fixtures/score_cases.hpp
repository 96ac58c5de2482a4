#pragma once

#include <optional>
#include <string>
#include <vector>

namespace ssr::testing {

struct ScoreCase {
  std::string response;
  bool parse_ok;
  std::optional<double> score;
};

// 50 judge-response fixtures exercising the documented extraction rules:
// the response must pass the think/answer gate, the score is the first
// maximal decimal-number token in the answer payload, out-of-range values
// clamp to [0, 100].
inline const std::vector<ScoreCase>& score_cases() {
  static const std::vector<ScoreCase> cases = {
      // plain integers
      {"<think>ok</think><answer>85</answer>", true, 85.0},
      {"<think>t</think><answer>0</answer>", true, 0.0},
      {"<think>t</think><answer>100</answer>", true, 100.0},
      {"<think>t</think><answer>42</answer>", true, 42.0},
      {"<think>reasoning</think><answer>7</answer>", true, 7.0},
      // N/100 forms
      {"<think>judging</think><answer>Score: 92.5/100</answer>", true, 92.5},
      {"<think>t</think><answer>85/100</answer>", true, 85.0},
      {"<think>t</think><answer>90 / 100</answer>", true, 90.0},
      {"<think>t</think><answer>I give it 73/100.</answer>", true, 73.0},
      {"<think>t</think><answer>100/100</answer>", true, 100.0},
      // decimals
      {"<think>t</think><answer>66.7</answer>", true, 66.7},
      {"<think>t</think><answer>0.5</answer>", true, 0.5},
      {"<think>t</think><answer>99.99</answer>", true, 99.99},
      {"<think>t</think><answer>Score is 88.25 overall</answer>", true, 88.25},
      {"<think>t</think><answer>3.14159</answer>", true, 3.14159},
      // out of range, clamped
      {"<think>t</think><answer>150</answer>", true, 100.0},
      {"<think>t</think><answer>1000</answer>", true, 100.0},
      {"<think>t</think><answer>100.5</answer>", true, 100.0},
      {"<think>t</think><answer>-5</answer>", true, 5.0},  // sign is not part of the token
      {"<think>t</think><answer>999999999999999999999</answer>", true, 100.0},
      // prose around the number
      {"<think>t</think><answer>The score is 77</answer>", true, 77.0},
      {"<think>t</think><answer>score=64</answer>", true, 64.0},
      {"<think>t</think><answer>I'd say 55, maybe 60</answer>", true, 55.0},
      {"<think>t</think><answer>between 20 and 30</answer>", true, 20.0},
      {"<think>t</think><answer>rate: 95 out of 100</answer>", true, 95.0},
      // whitespace and multi-line bodies
      {"<think>t</think>\n<answer>\n  83\n</answer>", true, 83.0},
      {"  <think>t</think> <answer> 61 </answer>  ", true, 61.0},
      {"<think>multi\nline</think><answer>44</answer>", true, 44.0},
      // long CoT and non-ascii think content
      {"<think>I need to evaluate the translation from English to Chinese.</think>"
       "<answer>96</answer>",
       true, 96.0},
      {"<think>\xe8\xaf\x84\xe4\xbc\xb0</think><answer>58</answer>", true, 58.0},
      // token-boundary shapes
      {"<think>t</think><answer>007</answer>", true, 7.0},
      {"<think>t</think><answer>50.</answer>", true, 50.0},   // trailing dot excluded
      {"<think>t</think><answer>.75</answer>", true, 75.0},   // leading dot excluded
      {"<think>t</think><answer>1e2</answer>", true, 1.0},    // exponent not part of the token
      {"<think>t</think><answer>12.5.7</answer>", true, 12.5},
      // no numeric token
      {"<think>judging</think><answer>excellent</answer>", false, std::nullopt},
      {"<think>t</think><answer>no score</answer>", false, std::nullopt},
      {"<think>t</think><answer>N/A</answer>", false, std::nullopt},
      {"<think>t</think><answer>????</answer>", false, std::nullopt},
      // structural failures
      {"85", false, std::nullopt},
      {"<answer>85</answer>", false, std::nullopt},
      {"<think>t</think>", false, std::nullopt},
      {"<answer>85</answer><think>t</think>", false, std::nullopt},
      {"<think>t</think><answer>85</answer><answer>90</answer>", false, std::nullopt},
      {"<think>t</think><answer>  </answer>", false, std::nullopt},
      {"<think>t</think>text<answer>85</answer>", false, std::nullopt},
      {"so <think>t</think><answer>85</answer>", false, std::nullopt},
      {"", false, std::nullopt},
      {"<think>85</think><answer>good</answer>", false, std::nullopt},
      {"<think>t</think><answer>85</answer> trailing", false, std::nullopt},
  };
  return cases;
}

}  // namespace ssr::testing
