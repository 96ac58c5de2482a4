#include "ssr/task.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "ssr/errors.hpp"
#include "ssr/random.hpp"
#include "ssr/textutil.hpp"

namespace ssr::task {

int CipherSpec::src_index(std::string_view token) const {
  auto it = src_idx_.find(std::string(token));
  return it == src_idx_.end() ? -1 : it->second;
}

int CipherSpec::tgt_index(std::string_view token) const {
  auto it = tgt_idx_.find(std::string(token));
  return it == tgt_idx_.end() ? -1 : it->second;
}

void CipherSpec::rebuild_index() {
  src_idx_.clear();
  tgt_idx_.clear();
  for (size_t i = 0; i < v_src.size(); ++i) src_idx_[v_src[i]] = static_cast<int>(i);
  for (size_t i = 0; i < v_tgt.size(); ++i) tgt_idx_[v_tgt[i]] = static_cast<int>(i);
}

std::string CipherSpec::translate(std::string_view sentence) const {
  const auto tokens = text::split_tokens(sentence);
  if (tokens.empty()) throw InvalidInput("CipherSpec::translate: empty sentence");

  std::vector<int> inverse(v_src.size(), -1);
  for (size_t i = 0; i < mapping.size(); ++i) inverse[mapping[i]] = static_cast<int>(i);

  const bool forward = src_index(tokens.front()) >= 0;
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) {
    if (forward) {
      int i = src_index(tok);
      if (i < 0) throw InvalidInput("CipherSpec::translate: token not in source vocabulary: " + tok);
      out.push_back(v_tgt[mapping[i]]);
    } else {
      int j = tgt_index(tok);
      if (j < 0) throw InvalidInput("CipherSpec::translate: token not in target vocabulary: " + tok);
      out.push_back(v_src[inverse[j]]);
    }
  }
  return text::join(out);
}

std::vector<protocol::TranslationPrompt> monolingualize(const CipherSpec& cipher,
                                                        std::span<const ParallelPair> pairs) {
  std::vector<protocol::TranslationPrompt> out;
  out.reserve(pairs.size() * 2);
  for (const auto& pair : pairs) {
    const std::string src_join = text::join(pair.src_tokens);
    const std::string tgt_join = text::join(pair.tgt_tokens);
    const std::string base = "p" + std::to_string(pair.id);
    out.push_back({base + ".fwd", cipher.lang_src, cipher.lang_tgt, src_join, tgt_join});
    out.push_back({base + ".bwd", cipher.lang_tgt, cipher.lang_src, tgt_join, src_join});
  }
  return out;
}

std::pair<CipherSpec, Corpus> gen_corpus(uint64_t seed, int vocab_size, int n_pairs,
                                         int len_min, int len_max, double test_fraction) {
  if (vocab_size < 2) throw InvalidInput("gen_corpus: vocab_size must be >= 2");
  if (n_pairs < 1) throw InvalidInput("gen_corpus: n_pairs must be >= 1");
  if (len_min < 1 || len_max < len_min) throw InvalidInput("gen_corpus: invalid length range");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw InvalidInput("gen_corpus: test_fraction must be in [0, 1)");

  CipherSpec cipher;
  cipher.seed = seed;
  cipher.v_src.reserve(vocab_size);
  cipher.v_tgt.reserve(vocab_size);
  for (int i = 0; i < vocab_size; ++i) {
    cipher.v_src.push_back("a" + std::to_string(i));
    cipher.v_tgt.push_back("b" + std::to_string(i));
  }
  cipher.mapping.resize(vocab_size);
  for (int i = 0; i < vocab_size; ++i) cipher.mapping[i] = i;
  rng::Rng map_rng(rng::derive_seed(seed, 0x1));
  rng::shuffle(cipher.mapping, map_rng);
  cipher.rebuild_index();

  Corpus corpus;
  corpus.parallel.reserve(n_pairs);
  rng::Rng sent_rng(rng::derive_seed(seed, 0x2));
  for (int k = 0; k < n_pairs; ++k) {
    ParallelPair pair;
    pair.id = k;
    const int len = len_min + static_cast<int>(sent_rng.next_below(len_max - len_min + 1));
    pair.src_tokens.reserve(len);
    pair.tgt_tokens.reserve(len);
    for (int t = 0; t < len; ++t) {
      const int i = static_cast<int>(sent_rng.next_below(vocab_size));
      pair.src_tokens.push_back(cipher.v_src[i]);
      pair.tgt_tokens.push_back(cipher.v_tgt[cipher.mapping[i]]);
    }
    corpus.parallel.push_back(std::move(pair));
  }

  corpus.monolingual = monolingualize(cipher, corpus.parallel);

  int n_test = static_cast<int>(std::lround(test_fraction * n_pairs));
  if (test_fraction > 0.0 && n_test < 1) n_test = 1;
  if (n_test >= n_pairs) n_test = n_pairs - 1;
  const int n_train = n_pairs - n_test;
  auto train_pairs = std::span<const ParallelPair>(corpus.parallel).first(n_train);
  auto test_pairs = std::span<const ParallelPair>(corpus.parallel).subspan(n_train);
  corpus.train = monolingualize(cipher, train_pairs);
  corpus.test = monolingualize(cipher, test_pairs);
  return {std::move(cipher), std::move(corpus)};
}

void write_prompts_jsonl(const std::filesystem::path& path,
                         std::span<const protocol::TranslationPrompt> prompts) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  for (const auto& p : prompts) {
    nlohmann::ordered_json j{{"id", p.id},
                             {"src_lang", p.src_lang},
                             {"tgt_lang", p.tgt_lang},
                             {"src_text", p.src_text}};
    if (p.ref_text) j["ref_text"] = *p.ref_text;
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<protocol::TranslationPrompt> read_prompts_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::vector<protocol::TranslationPrompt> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_all_whitespace(line)) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    protocol::TranslationPrompt p;
    p.id = j.at("id").get<std::string>();
    p.src_lang = j.at("src_lang").get<std::string>();
    p.tgt_lang = j.at("tgt_lang").get<std::string>();
    p.src_text = j.at("src_text").get<std::string>();
    if (j.contains("ref_text") && !j["ref_text"].is_null())
      p.ref_text = j["ref_text"].get<std::string>();
    if (p.src_lang == p.tgt_lang)
      throw InvalidInput(path.string() + ":" + std::to_string(line_no) +
                         ": src_lang equals tgt_lang");
    if (p.src_text.empty())
      throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": empty src_text");
    out.push_back(std::move(p));
  }
  return out;
}

void write_cipher_json(const std::filesystem::path& path, const CipherSpec& cipher) {
  nlohmann::ordered_json j{{"lang_src", cipher.lang_src},
                           {"lang_tgt", cipher.lang_tgt},
                           {"v_src", cipher.v_src},
                           {"v_tgt", cipher.v_tgt},
                           {"mapping", cipher.mapping},
                           {"seed", cipher.seed}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

CipherSpec read_cipher_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  CipherSpec cipher;
  cipher.lang_src = j.at("lang_src").get<std::string>();
  cipher.lang_tgt = j.at("lang_tgt").get<std::string>();
  cipher.v_src = j.at("v_src").get<std::vector<std::string>>();
  cipher.v_tgt = j.at("v_tgt").get<std::vector<std::string>>();
  cipher.mapping = j.at("mapping").get<std::vector<int>>();
  cipher.seed = j.at("seed").get<uint64_t>();
  if (cipher.v_src.size() != cipher.v_tgt.size() || cipher.mapping.size() != cipher.v_src.size())
    throw InvalidInput("cipher file: inconsistent vocabulary/mapping sizes");
  std::vector<bool> seen(cipher.mapping.size(), false);
  for (int m : cipher.mapping) {
    if (m < 0 || static_cast<size_t>(m) >= cipher.mapping.size() || seen[m])
      throw InvalidInput("cipher file: mapping is not a bijection");
    seen[m] = true;
  }
  cipher.rebuild_index();
  return cipher;
}

}  // namespace ssr::task
