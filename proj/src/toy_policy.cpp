#include "ssr/toy_policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ssr/errors.hpp"
#include "ssr/protocol.hpp"
#include "ssr/random.hpp"
#include "ssr/textutil.hpp"

namespace ssr::policy {
namespace {

constexpr double kLogitClamp = 40.0;  // sigmoid(40) is 1 within double precision

// log(sigmoid(x)) and log(1 - sigmoid(x)) without overflow.
double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

int find_index(const std::vector<std::string>& tokens, std::string_view tok) {
  for (size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i] == tok) return static_cast<int>(i);
  return -1;
}

// Greedy pick: highest probability, ties broken by lowest index.
size_t argmax(const std::vector<double>& v) {
  size_t best = 0;
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

size_t sample_categorical(const std::vector<double>& probs, rng::Rng& rng) {
  const double u = rng.next_double();
  double cum = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  return probs.size() - 1;  // guard against rounding shortfall
}

std::string think_line(std::string_view src_lang, std::string_view tgt_lang) {
  std::string out = "I need to translate this sentence from ";
  out += src_lang;
  out += " to ";
  out += tgt_lang;
  out += ".";
  return out;
}

}  // namespace

std::vector<double> log_softmax(const std::vector<double>& logits, double temperature) {
  if (temperature <= 0.0) throw InvalidInput("log_softmax: temperature must be > 0");
  std::vector<double> out(logits.size());
  double m = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = logits[i] / temperature;
    m = std::max(m, out[i]);
  }
  double lse = 0.0;
  for (double x : out) lse += std::exp(x - m);
  lse = m + std::log(lse);
  for (double& x : out) x -= lse;
  return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit_from_prob(double p) {
  const double lo = sigmoid(-kLogitClamp);
  p = std::clamp(p, lo, 1.0 - lo);
  return std::log(p / (1.0 - p));
}

int ToyVocab::index_a(std::string_view token) const { return find_index(tokens_a, token); }
int ToyVocab::index_b(std::string_view token) const { return find_index(tokens_b, token); }

ToyGradient ToyGradient::zeros_like(const ToyPolicyParams& params) {
  ToyGradient g;
  g.fwd_logits.assign(params.fwd_logits.size(),
                      std::vector<double>(params.fwd_logits.empty() ? 0 : params.fwd_logits[0].size(), 0.0));
  g.bwd_logits.assign(params.bwd_logits.size(),
                      std::vector<double>(params.bwd_logits.empty() ? 0 : params.bwd_logits[0].size(), 0.0));
  return g;
}

void ToyGradient::scale(double factor) {
  for (auto& row : fwd_logits)
    for (double& x : row) x *= factor;
  for (auto& row : bwd_logits)
    for (double& x : row) x *= factor;
  format_logit *= factor;
  quote_logit *= factor;
}

double ToyGradient::l2_norm() const {
  double s = format_logit * format_logit + quote_logit * quote_logit;
  for (const auto& row : fwd_logits)
    for (double x : row) s += x * x;
  for (const auto& row : bwd_logits)
    for (double x : row) s += x * x;
  return std::sqrt(s);
}

ToyPolicy::ToyPolicy(ToyVocab vocab, ToyPolicyParams params)
    : vocab_(std::move(vocab)), params_(std::move(params)) {
  const size_t na = vocab_.tokens_a.size();
  const size_t nb = vocab_.tokens_b.size();
  if (params_.fwd_logits.size() != na || params_.bwd_logits.size() != nb)
    throw InvalidInput("ToyPolicy: logit matrices do not match vocabulary sizes");
  for (const auto& row : params_.fwd_logits)
    if (row.size() != nb) throw InvalidInput("ToyPolicy: fwd_logits row size mismatch");
  for (const auto& row : params_.bwd_logits)
    if (row.size() != na) throw InvalidInput("ToyPolicy: bwd_logits row size mismatch");
}

ToyPolicy ToyPolicy::from_cipher(const task::CipherSpec& cipher, const ToyInit& init) {
  ToyVocab vocab{cipher.lang_src, cipher.lang_tgt, cipher.v_src, cipher.v_tgt};
  const size_t n = cipher.v_src.size();
  ToyPolicyParams params;
  params.fwd_logits.assign(n, std::vector<double>(n, 0.0));
  params.bwd_logits.assign(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i) {
    const int j = cipher.mapping[i];
    params.fwd_logits[i][j] += init.translation_prior;
    params.bwd_logits[j][i] += init.translation_prior;
  }
  params.format_logit = logit_from_prob(init.format_prob);
  params.quote_logit = logit_from_prob(init.quote_prob);
  params.rng_state = rng::derive_seed(cipher.seed, 0xf00d);
  return ToyPolicy(std::move(vocab), std::move(params));
}

std::string ToyPolicy::identity() const {
  return "toy-cipher/v1 " + vocab_.lang_a + "<->" + vocab_.lang_b + " |V|=" +
         std::to_string(vocab_.tokens_a.size());
}

ToyPolicy::ActorRequest ToyPolicy::parse_actor_request(const std::string& actor_prompt) const {
  auto fields = protocol::parse_actor_prompt(actor_prompt);
  if (!fields) throw ProtocolMismatch("toy policy: not an actor prompt");
  ActorRequest req;
  if (fields->tgt_lang == vocab_.lang_b)
    req.direction = 0;
  else if (fields->tgt_lang == vocab_.lang_a)
    req.direction = 1;
  else
    throw ProtocolMismatch("toy policy: unknown target language: " + fields->tgt_lang);

  const auto tokens = text::split_tokens(fields->src_text);
  req.src_ids.reserve(tokens.size());
  for (const auto& tok : tokens) {
    const int id = req.direction == 0 ? vocab_.index_a(tok) : vocab_.index_b(tok);
    if (id < 0) throw ProtocolMismatch("toy policy: source token out of vocabulary: " + tok);
    req.src_ids.push_back(id);
  }
  if (req.src_ids.empty()) throw ProtocolMismatch("toy policy: empty source");
  return req;
}

GenerationResult ToyPolicy::generate(const std::string& prompt_text, double temperature,
                                     int max_tokens, std::optional<uint64_t> seed) {
  if (protocol::parse_actor_prompt(prompt_text)) return act(prompt_text, temperature, max_tokens, seed);
  if (protocol::parse_judge_prompt(prompt_text)) return judge(prompt_text);
  throw ProtocolMismatch("toy policy: prompt matches neither the actor nor the judge template");
}

GenerationResult ToyPolicy::act(const std::string& actor_prompt, double temperature, int max_tokens,
                                std::optional<uint64_t> seed) {
  if (max_tokens < 1) throw InvalidInput("act: max_tokens must be >= 1");
  const ActorRequest req = parse_actor_request(actor_prompt);

  const uint64_t seed_used = seed ? *seed : rng::splitmix64(params_.rng_state);
  rng::Rng rng(seed_used);

  Decisions d;
  d.direction = req.direction;
  d.src_ids = req.src_ids;
  const size_t emit = std::min(req.src_ids.size(), static_cast<size_t>(max_tokens));

  std::vector<double> logprobs;
  logprobs.reserve(emit + 2);
  const auto& rows = logits_for(d.direction);
  for (size_t t = 0; t < emit; ++t) {
    const auto& row = rows[req.src_ids[t]];
    size_t pick;
    double lp;
    if (temperature > 0.0) {
      const auto lsm = log_softmax(row, temperature);
      std::vector<double> probs(lsm.size());
      for (size_t i = 0; i < lsm.size(); ++i) probs[i] = std::exp(lsm[i]);
      pick = sample_categorical(probs, rng);
      lp = lsm[pick];
    } else {
      pick = argmax(row);
      lp = 0.0;  // point mass
    }
    d.out_ids.push_back(static_cast<int>(pick));
    logprobs.push_back(lp);
  }

  auto bernoulli = [&](double logit, bool& outcome) {
    if (temperature > 0.0) {
      const double p = sigmoid(logit / temperature);
      // outcomes ordered [no, yes]; the draw walks the same CDF convention
      // as the categorical head
      outcome = !(rng.next_double() < 1.0 - p);
      logprobs.push_back(outcome ? log_sigmoid(logit / temperature)
                                 : log_sigmoid(-logit / temperature));
    } else {
      outcome = logit > 0.0;  // tie at p = 0.5 resolves to the first outcome: no
      logprobs.push_back(0.0);
    }
  };
  bernoulli(params_.format_logit, d.format_ok);
  bernoulli(params_.quote_logit, d.quoted);

  GenerationResult out;
  out.text = render_completion(d);
  out.token_logprobs = std::move(logprobs);
  out.seed_used = seed_used;
  return out;
}

GenerationResult ToyPolicy::judge(const std::string& judge_prompt) const {
  auto fields = protocol::parse_judge_prompt(judge_prompt);
  if (!fields) throw ProtocolMismatch("toy policy: not a judge prompt");

  int direction;
  if (fields->src_lang == vocab_.lang_a && fields->tgt_lang == vocab_.lang_b)
    direction = 0;
  else if (fields->src_lang == vocab_.lang_b && fields->tgt_lang == vocab_.lang_a)
    direction = 1;
  else
    throw ProtocolMismatch("toy policy: unknown judge direction " + fields->src_lang + "->" +
                           fields->tgt_lang);

  std::vector<int> src_ids;
  for (const auto& tok : text::split_tokens(fields->src_text)) {
    const int id = direction == 0 ? vocab_.index_a(tok) : vocab_.index_b(tok);
    if (id < 0) throw ProtocolMismatch("toy policy: judge source token out of vocabulary: " + tok);
    src_ids.push_back(id);
  }
  if (src_ids.empty()) throw ProtocolMismatch("toy policy: judge source empty");

  const auto cand_tokens = text::split_tokens(fields->translated_text);
  long long score = 0;
  if (cand_tokens.size() == src_ids.size()) {
    bool in_vocab = true;
    double mean_p = 0.0;
    const auto& rows = logits_for(direction);
    const auto& out_tokens = out_tokens_for(direction);
    for (size_t t = 0; t < cand_tokens.size(); ++t) {
      const int id = find_index(out_tokens, cand_tokens[t]);
      if (id < 0) {
        in_vocab = false;  // wrong language or junk: zero per the judge rules
        break;
      }
      const auto lsm = log_softmax(rows[src_ids[t]], 1.0);
      mean_p += std::exp(lsm[id]);
    }
    if (in_vocab) {
      mean_p /= static_cast<double>(cand_tokens.size());
      score = std::llround(100.0 * mean_p);
    }
  }

  GenerationResult out;
  out.text = "<think>I need to evaluate the translation from " + fields->src_lang + " to " +
             fields->tgt_lang + ".</think><answer>" + std::to_string(score) + "</answer>";
  out.token_logprobs = std::vector<double>{};  // no sampled decisions
  return out;
}

std::vector<double> ToyPolicy::score_logprobs(const std::string& prompt_text,
                                              const std::string& completion_text,
                                              double temperature) {
  if (temperature <= 0.0) throw InvalidInput("score_logprobs: temperature must be > 0");
  const Decisions d = parse_completion(prompt_text, completion_text);
  return decision_logprobs(d, temperature);
}

void ToyPolicy::apply_gradient(const ToyGradient& gradient, double learning_rate) {
  if (gradient.fwd_logits.size() != params_.fwd_logits.size() ||
      gradient.bwd_logits.size() != params_.bwd_logits.size())
    throw InvalidInput("apply_gradient: shape mismatch");
  for (size_t i = 0; i < params_.fwd_logits.size(); ++i) {
    if (gradient.fwd_logits[i].size() != params_.fwd_logits[i].size())
      throw InvalidInput("apply_gradient: shape mismatch");
    for (size_t j = 0; j < params_.fwd_logits[i].size(); ++j)
      params_.fwd_logits[i][j] += learning_rate * gradient.fwd_logits[i][j];
  }
  for (size_t i = 0; i < params_.bwd_logits.size(); ++i) {
    if (gradient.bwd_logits[i].size() != params_.bwd_logits[i].size())
      throw InvalidInput("apply_gradient: shape mismatch");
    for (size_t j = 0; j < params_.bwd_logits[i].size(); ++j)
      params_.bwd_logits[i][j] += learning_rate * gradient.bwd_logits[i][j];
  }
  params_.format_logit += learning_rate * gradient.format_logit;
  params_.quote_logit += learning_rate * gradient.quote_logit;
}

ToyPolicy::Decisions ToyPolicy::parse_completion(const std::string& actor_prompt,
                                                 const std::string& completion_text) const {
  const ActorRequest req = parse_actor_request(actor_prompt);

  Decisions d;
  d.direction = req.direction;
  d.src_ids = req.src_ids;

  const auto verdict = protocol::check_format(completion_text);
  std::string payload;
  if (verdict.ok) {
    d.format_ok = true;
    payload = protocol::extract_answer(completion_text);
  } else {
    d.format_ok = false;
    payload = completion_text;
  }

  if (payload.size() >= 2 && payload.front() == '"' && payload.back() == '"') {
    d.quoted = true;
    payload = payload.substr(1, payload.size() - 2);
  }

  const auto tokens = text::split_tokens(payload);
  if (tokens.empty() || tokens.size() > req.src_ids.size())
    throw InvalidCompletion("toy policy: completion token count outside support");
  const auto& out_tokens = out_tokens_for(d.direction);
  for (const auto& tok : tokens) {
    const int id = find_index(out_tokens, tok);
    if (id < 0) throw InvalidCompletion("toy policy: completion token out of vocabulary: " + tok);
    d.out_ids.push_back(id);
  }

  if (render_completion(d) != completion_text)
    throw InvalidCompletion("toy policy: completion does not match the policy's rendering");
  return d;
}

std::vector<double> ToyPolicy::decision_logprobs(const Decisions& d, double temperature) const {
  if (temperature <= 0.0) throw InvalidInput("decision_logprobs: temperature must be > 0");
  std::vector<double> out;
  out.reserve(d.count());
  const auto& rows = logits_for(d.direction);
  for (size_t t = 0; t < d.out_ids.size(); ++t) {
    const auto lsm = log_softmax(rows[d.src_ids[t]], temperature);
    out.push_back(lsm[d.out_ids[t]]);
  }
  const double xf = params_.format_logit / temperature;
  out.push_back(d.format_ok ? log_sigmoid(xf) : log_sigmoid(-xf));
  const double xq = params_.quote_logit / temperature;
  out.push_back(d.quoted ? log_sigmoid(xq) : log_sigmoid(-xq));
  return out;
}

void ToyPolicy::accumulate_decision_grad(const Decisions& d, size_t index, double weight,
                                         double temperature, ToyGradient& grad) const {
  if (temperature <= 0.0) throw InvalidInput("accumulate_decision_grad: temperature must be > 0");
  if (index >= d.count()) throw InvalidInput("accumulate_decision_grad: decision index out of range");

  const size_t n = d.out_ids.size();
  if (index < n) {
    const int row_id = d.src_ids[index];
    const int chosen = d.out_ids[index];
    const auto& rows = logits_for(d.direction);
    const auto lsm = log_softmax(rows[row_id], temperature);
    auto& grow = d.direction == 0 ? grad.fwd_logits[row_id] : grad.bwd_logits[row_id];
    for (size_t v = 0; v < lsm.size(); ++v) {
      const double p = std::exp(lsm[v]);
      grow[v] += weight * ((static_cast<int>(v) == chosen ? 1.0 : 0.0) - p) / temperature;
    }
    return;
  }

  if (index == n) {
    const double s = sigmoid(params_.format_logit / temperature);
    grad.format_logit += weight * (d.format_ok ? (1.0 - s) : -s) / temperature;
  } else {
    const double s = sigmoid(params_.quote_logit / temperature);
    grad.quote_logit += weight * (d.quoted ? (1.0 - s) : -s) / temperature;
  }
}

std::string ToyPolicy::render_completion(const Decisions& d) const {
  const auto& out_tokens = out_tokens_for(d.direction);
  std::vector<std::string> words;
  words.reserve(d.out_ids.size());
  for (int id : d.out_ids) words.push_back(out_tokens[id]);
  std::string content = text::join(words);
  if (d.quoted) content = "\"" + content + "\"";
  if (!d.format_ok) return content;

  const std::string_view src_lang = d.direction == 0 ? vocab_.lang_a : vocab_.lang_b;
  const std::string_view tgt_lang = d.direction == 0 ? vocab_.lang_b : vocab_.lang_a;
  return std::string(protocol::kThinkOpen) + think_line(src_lang, tgt_lang) +
         std::string(protocol::kThinkClose) + std::string(protocol::kAnswerOpen) + content +
         std::string(protocol::kAnswerClose);
}

}  // namespace ssr::policy
