#include "ssr/textutil.hpp"

#include <charconv>
#include <system_error>

namespace ssr::text {

std::vector<std::string> split_tokens(std::string_view s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    i = s.find_first_not_of(kWhitespace, i);
    if (i == std::string_view::npos) break;
    size_t end = s.find_first_of(kWhitespace, i);
    if (end == std::string_view::npos) end = s.size();
    out.emplace_back(s.substr(i, end - i));
    i = end;
  }
  return out;
}

std::string join(const std::vector<std::string>& tokens, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

std::string replace_all(std::string_view s, std::string_view from, std::string_view to) {
  std::string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    size_t hit = s.find(from, i);
    if (hit == std::string_view::npos || from.empty()) {
      out.append(s.substr(i));
      break;
    }
    out.append(s.substr(i, hit - i));
    out.append(to);
    i = hit + from.size();
  }
  return out;
}

size_t count_occurrences(std::string_view s, std::string_view needle) {
  if (needle.empty()) return 0;
  size_t n = 0;
  size_t i = 0;
  while ((i = s.find(needle, i)) != std::string_view::npos) {
    ++n;
    i += needle.size();
  }
  return n;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

}  // namespace ssr::text
