#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "ssr/evalharness.hpp"
#include "ssr/external.hpp"
#include "ssr/random.hpp"
#include "ssr/task.hpp"
#include "ssr/textutil.hpp"
#include "ssr/toy_policy.hpp"

using namespace ssr;
using namespace ssr::evalharness;

namespace {

struct World {
  task::CipherSpec cipher;
  task::Corpus corpus;
};

World make_world(uint64_t seed = 7, int vocab = 20, int pairs = 30) {
  auto [cipher, corpus] = task::gen_corpus(seed, vocab, pairs, 3, 6);
  return {cipher, corpus};
}

}  // namespace

TEST_CASE("quote detection requires a matching enclosing pair") {
  CHECK(detect_extraneous_quotes("\"b1 b2\""));
  CHECK_FALSE(detect_extraneous_quotes("b1 b2"));
  CHECK_FALSE(detect_extraneous_quotes("\"b1 b2"));  // unmatched
  CHECK_FALSE(detect_extraneous_quotes("b1 b2\""));
  CHECK(detect_extraneous_quotes("\xe2\x80\x9c"
                                 "b1 b2"
                                 "\xe2\x80\x9d"));  // curly pair
  CHECK_FALSE(detect_extraneous_quotes("\xe2\x80\x9c"
                                       "b1 b2\""));  // mismatched styles
  CHECK(detect_extraneous_quotes("\"\""));
  CHECK_FALSE(detect_extraneous_quotes("\""));
  CHECK_FALSE(detect_extraneous_quotes(""));

  CHECK(*strip_enclosing_quotes("\"b1 b2\"") == "b1 b2");
  CHECK_FALSE(strip_enclosing_quotes("b1 b2").has_value());
}

TEST_CASE("a saturated policy evaluates perfectly") {
  auto world = make_world();
  auto policy =
      policy::ToyPolicy::from_cipher(world.cipher, policy::ToyInit{20.0, 0.999, 0.001});
  auto report = evaluate(policy, world.corpus.test, world.cipher);
  CHECK(report.n_evaluated == static_cast<int>(world.corpus.test.size()));
  CHECK(report.exact_match == 1.0);
  CHECK(report.aggregated == 1.0);
  CHECK(report.format_rate == 1.0);
  CHECK(report.quote_rate == 0.0);
  REQUIRE(report.directions.size() == 2);
  for (const auto& d : report.directions) {
    CHECK(d.ref_based == 1.0);
    CHECK(d.ref_free == 1.0);
  }
}

TEST_CASE("a fully uniform policy scores near zero") {
  auto world = make_world(7, 20, 40);
  // coin-flip format head: greedy generation resolves the tie to bare text,
  // so every output fails the gate and both metrics stay zero
  auto policy = policy::ToyPolicy::from_cipher(world.cipher, policy::ToyInit{0.0, 0.5, 0.0});
  auto report = evaluate(policy, world.corpus.test, world.cipher);
  CHECK(report.format_rate == 0.0);
  CHECK(report.aggregated <= 0.05);
  CHECK(report.exact_match == 0.0);

  // with the format head forced open, uniform rows still translate at chance
  auto formatted = policy::ToyPolicy::from_cipher(world.cipher, policy::ToyInit{0.0, 0.999, 0.0});
  auto formatted_report = evaluate(formatted, world.corpus.test, world.cipher);
  CHECK(formatted_report.format_rate == 1.0);
  CHECK(formatted_report.aggregated <= 0.2);  // greedy ties collapse to one target token
  CHECK(formatted_report.exact_match <= 0.05);
}

TEST_CASE("quote-wrapping shows up in the rate and the raw/stripped gap") {
  auto world = make_world(9);
  auto policy = policy::ToyPolicy::from_cipher(world.cipher, policy::ToyInit{20.0, 0.999, 0.9});
  auto report = evaluate(policy, world.corpus.test, world.cipher);
  CHECK(report.quote_rate > 0.8);
  CHECK(report.aggregated_stripped > report.aggregated);
  CHECK(report.aggregated_stripped == doctest::Approx(1.0));
  CHECK(report.exact_match == 0.0);  // raw answers carry the quotes
}

TEST_CASE("stripping an enclosing pair never lowers an oracle score") {
  auto world = make_world(17, 12, 20);
  rng::Rng rng(123);
  for (const auto& prompt : world.corpus.monolingual) {
    const auto& tgt_vocab =
        prompt.tgt_lang == world.cipher.lang_tgt ? world.cipher.v_tgt : world.cipher.v_src;
    std::vector<std::string> tokens;
    const size_t n = 1 + rng.next_below(6);
    for (size_t i = 0; i < n; ++i) tokens.push_back(tgt_vocab[rng.next_below(tgt_vocab.size())]);
    std::string answer = text::join(tokens);
    if (rng.next_below(2)) answer = "\"" + answer + "\"";

    const auto stripped = strip_enclosing_quotes(answer);
    const std::string& cleaned = stripped ? *stripped : answer;
    if (cleaned.empty()) continue;
    const double raw = external::oracle_ref_score(prompt.src_text, answer, *prompt.ref_text);
    const double better = external::oracle_ref_score(prompt.src_text, cleaned, *prompt.ref_text);
    CHECK(better >= raw);
  }
}

TEST_CASE("evaluation at temperature zero is deterministic and order-invariant") {
  auto world = make_world(21, 10, 20);
  auto policy = policy::ToyPolicy::from_cipher(world.cipher, policy::ToyInit{1.5, 0.8, 0.2});

  auto a = evaluate(policy, world.corpus.test, world.cipher);
  auto b = evaluate(policy, world.corpus.test, world.cipher);
  CHECK(a.aggregated == b.aggregated);
  CHECK(a.exact_match == b.exact_match);
  CHECK(a.quote_rate == b.quote_rate);

  auto shuffled = world.corpus.test;
  std::reverse(shuffled.begin(), shuffled.end());
  auto c = evaluate(policy, shuffled, world.cipher);
  CHECK(c.aggregated == a.aggregated);
  CHECK(c.format_rate == a.format_rate);
}

TEST_CASE("aggregated average is the mean of the four direction cells") {
  auto world = make_world(25, 10, 20);
  auto policy = policy::ToyPolicy::from_cipher(world.cipher, policy::ToyInit{2.0, 0.999, 0.0});
  auto report = evaluate(policy, world.corpus.test, world.cipher);
  REQUIRE(report.directions.size() == 2);
  const double mean = (report.directions[0].ref_based + report.directions[0].ref_free +
                       report.directions[1].ref_based + report.directions[1].ref_free) /
                      4.0;
  CHECK(report.aggregated == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("report serialization carries the headline numbers") {
  auto world = make_world(27, 8, 10);
  auto policy = policy::ToyPolicy::from_cipher(world.cipher, policy::ToyInit{3.0, 0.9, 0.1});
  auto report = evaluate(policy, world.corpus.test, world.cipher);
  const auto j = to_json(report);
  CHECK(j.at("aggregated").get<double>() == report.aggregated);
  CHECK(j.at("format_rate").get<double>() == report.format_rate);
  CHECK(j.at("directions").size() == report.directions.size());

  std::ostringstream table;
  print_table(table, report);
  CHECK(table.str().find("aggregated:") != std::string::npos);
}
