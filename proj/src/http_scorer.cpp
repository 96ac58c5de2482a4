#include "ssr/http_scorer.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ssr/errors.hpp"

namespace ssr::external {

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidInput("malformed url (missing scheme): " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

// Counting semaphore; std::counting_semaphore needs a compile-time max, and
// the cap comes from config.
struct HttpScorer::Gate {
  explicit Gate(int max) : available(max < 1 ? 1 : max) {}
  std::mutex mu;
  std::condition_variable cv;
  int available;

  struct Ticket {
    Gate& gate;
    explicit Ticket(Gate& g) : gate(g) {
      std::unique_lock lk(gate.mu);
      gate.cv.wait(lk, [&] { return gate.available > 0; });
      --gate.available;
    }
    ~Ticket() {
      {
        std::lock_guard lk(gate.mu);
        ++gate.available;
      }
      gate.cv.notify_one();
    }
  };
};

HttpScorer::HttpScorer(HttpScorerConfig config) : config_(std::move(config)) {
  std::tie(host_, path_) = split_url(config_.url);
  gate_ = std::make_unique<Gate>(config_.max_concurrency);
}

HttpScorer::~HttpScorer() = default;

double HttpScorer::score(const std::string& src_text, const std::string& mt_text,
                         const std::optional<std::string>& ref_text) {
  if (config_.kind == ScorerKind::reference_based && !ref_text)
    throw InvalidInput("HttpScorer: reference required by configuration");

  nlohmann::json body{{"src", src_text}, {"mt", mt_text}};
  if (ref_text) body["ref"] = *ref_text;
  const std::string payload = body.dump();

  Gate::Ticket ticket(*gate_);

  const int attempts = config_.retries + 1;
  int last_status = 0;
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0 && config_.backoff_ms > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_ms << (attempt - 1)));

    httplib::Client client(host_);
    client.set_connection_timeout(0, config_.timeout_ms * 1000);
    client.set_read_timeout(0, config_.timeout_ms * 1000);
    if (const char* token = std::getenv(config_.auth_token_env.c_str()); token && *token)
      client.set_bearer_token_auth(token);

    auto res = client.Post(path_, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      last_status = 0;
      continue;
    }
    last_status = res->status;
    if (res->status != 200) {
      last_error = "http status " + std::to_string(res->status);
      continue;
    }
    try {
      const auto parsed = nlohmann::json::parse(res->body);
      const double raw = parsed.at("score").get<double>();
      return std::clamp(raw, 0.0, 1.0);
    } catch (const std::exception& e) {
      last_error = std::string("bad response body: ") + e.what();
    }
  }

  if (config_.fallback_zero) return 0.0;
  throw ScorerUnavailable("scoring service unreachable after " + std::to_string(attempts) +
                              " attempts (" + last_error + ")",
                          attempts);
}

}  // namespace ssr::external
