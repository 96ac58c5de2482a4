#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ssr/protocol.hpp"

namespace ssr::task {

// A bijective token-substitution "language pair": every source token a{i}
// maps to exactly one target token b{mapping[i]}. Gives the task an exact
// oracle: each prompt has a single perfect translation.
struct CipherSpec {
  std::string lang_src = "Alpha";
  std::string lang_tgt = "Beta";
  std::vector<std::string> v_src;  // "a0".."aN-1"
  std::vector<std::string> v_tgt;  // "b0".."bN-1"
  std::vector<int> mapping;        // v_src[i] -> v_tgt[mapping[i]]
  uint64_t seed = 0;

  int src_index(std::string_view token) const;  // -1 when unknown
  int tgt_index(std::string_view token) const;

  // Translates a whole sentence in either direction, detecting the language
  // from the first token. Throws InvalidInput on out-of-vocabulary or
  // mixed-language input.
  std::string translate(std::string_view sentence) const;

  void rebuild_index();  // call after mutating vocabularies/mapping

 private:
  std::unordered_map<std::string, int> src_idx_, tgt_idx_;
};

struct ParallelPair {
  int id = 0;
  std::vector<std::string> src_tokens;
  std::vector<std::string> tgt_tokens;
};

struct Corpus {
  std::vector<ParallelPair> parallel;
  std::vector<protocol::TranslationPrompt> monolingual;  // both directions, all pairs
  std::vector<protocol::TranslationPrompt> train;        // split disjoint by pair id
  std::vector<protocol::TranslationPrompt> test;
};

// Each pair becomes two prompts: src->tgt with the target side as reference,
// and tgt->src with the source side as reference. References feed oracle
// scorers and are never shown to the actor.
std::vector<protocol::TranslationPrompt> monolingualize(const CipherSpec& cipher,
                                                        std::span<const ParallelPair> pairs);

// Deterministic synthetic corpus. Sentence lengths are uniform in
// [len_min, len_max]; the last round(test_fraction * n_pairs) pairs (at
// least one) form the held-out test split.
std::pair<CipherSpec, Corpus> gen_corpus(uint64_t seed, int vocab_size, int n_pairs,
                                         int len_min, int len_max,
                                         double test_fraction = 0.1);

// JSONL persistence, one {"id","src_lang","tgt_lang","src_text","ref_text"}
// object per prompt.
void write_prompts_jsonl(const std::filesystem::path& path,
                         std::span<const protocol::TranslationPrompt> prompts);
std::vector<protocol::TranslationPrompt> read_prompts_jsonl(const std::filesystem::path& path);

void write_cipher_json(const std::filesystem::path& path, const CipherSpec& cipher);
CipherSpec read_cipher_json(const std::filesystem::path& path);

}  // namespace ssr::task
