#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ssr/task.hpp"

namespace ssr::external {

enum class ScorerKind { reference_based, reference_free };

// External translation-quality source, normalized to [0, 1].
class ExternalScorer {
 public:
  virtual ~ExternalScorer() = default;
  virtual ScorerKind kind() const = 0;
  virtual std::string identity() const = 0;
  virtual double score(const std::string& src_text, const std::string& mt_text,
                       const std::optional<std::string>& ref_text) = 0;
};

// Token-level edit distance, exposed for the scorer tests.
size_t token_levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b);

// 1 - levenshtein(mt, ref) / max(|mt|, |ref|) over whitespace tokens.
// Throws InvalidInput when ref_text is empty.
double oracle_ref_score(std::string_view src_text, std::string_view mt_text,
                        std::string_view ref_text);

// Reference-free variant: derives the reference by applying the cipher to
// the source, then scores exactly like oracle_ref_score.
double oracle_free_score(std::string_view src_text, std::string_view mt_text,
                         const task::CipherSpec& cipher);

class OracleRefScorer final : public ExternalScorer {
 public:
  ScorerKind kind() const override { return ScorerKind::reference_based; }
  std::string identity() const override { return "oracle-ref/v1"; }
  double score(const std::string& src_text, const std::string& mt_text,
               const std::optional<std::string>& ref_text) override;
};

class OracleFreeScorer final : public ExternalScorer {
 public:
  explicit OracleFreeScorer(task::CipherSpec cipher) : cipher_(std::move(cipher)) {}
  ScorerKind kind() const override { return ScorerKind::reference_free; }
  std::string identity() const override { return "oracle-free/v1"; }
  double score(const std::string& src_text, const std::string& mt_text,
               const std::optional<std::string>& ref_text) override;

 private:
  task::CipherSpec cipher_;
};

}  // namespace ssr::external
