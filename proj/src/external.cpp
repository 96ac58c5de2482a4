#include "ssr/external.hpp"

#include <algorithm>

#include "ssr/errors.hpp"
#include "ssr/textutil.hpp"

namespace ssr::external {

size_t token_levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const size_t n = a.size(), m = b.size();
  if (n == 0) return m;
  if (m == 0) return n;
  std::vector<size_t> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = j;
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= m; ++j) {
      const size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double oracle_ref_score(std::string_view, std::string_view mt_text, std::string_view ref_text) {
  const auto ref = text::split_tokens(ref_text);
  if (ref.empty()) throw InvalidInput("oracle_ref_score: empty reference");
  const auto mt = text::split_tokens(mt_text);
  const size_t denom = std::max(mt.size(), ref.size());
  const size_t dist = token_levenshtein(mt, ref);
  return 1.0 - static_cast<double>(dist) / static_cast<double>(denom);
}

double oracle_free_score(std::string_view src_text, std::string_view mt_text,
                         const task::CipherSpec& cipher) {
  // translate() rejects out-of-vocabulary sources with InvalidInput
  const std::string derived_ref = cipher.translate(src_text);
  return oracle_ref_score(src_text, mt_text, derived_ref);
}

double OracleRefScorer::score(const std::string& src_text, const std::string& mt_text,
                              const std::optional<std::string>& ref_text) {
  if (!ref_text) throw InvalidInput("OracleRefScorer: reference required");
  return oracle_ref_score(src_text, mt_text, *ref_text);
}

double OracleFreeScorer::score(const std::string& src_text, const std::string& mt_text,
                               const std::optional<std::string>&) {
  return oracle_free_score(src_text, mt_text, cipher_);
}

}  // namespace ssr::external
