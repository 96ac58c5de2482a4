#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ssr::text {

inline constexpr std::string_view kWhitespace = " \t\n\r\f\v";

inline std::string_view trim(std::string_view s) {
  auto begin = s.find_first_not_of(kWhitespace);
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(kWhitespace);
  return s.substr(begin, end - begin + 1);
}

inline bool is_all_whitespace(std::string_view s) {
  return s.find_first_not_of(kWhitespace) == std::string_view::npos;
}

// Splits on runs of whitespace; never produces empty tokens.
std::vector<std::string> split_tokens(std::string_view s);

std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");

// Replaces every occurrence of `from` with `to`, scanning left to right once.
std::string replace_all(std::string_view s, std::string_view from, std::string_view to);

// Number of non-overlapping occurrences of `needle` in `s`.
size_t count_occurrences(std::string_view s, std::string_view needle);

// Shortest round-trip decimal rendering of a double (via std::to_chars), used
// wherever output files must be byte-stable.
std::string format_double(double v);

}  // namespace ssr::text
