#include "ssr/http_backend.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ssr/errors.hpp"
#include "ssr/http_scorer.hpp"  // split_url

namespace ssr::policy {

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  std::tie(host_, path_) = external::split_url(config_.url);
}

GenerationResult HttpBackend::generate(const std::string& prompt_text, double temperature,
                                       int max_tokens, std::optional<uint64_t> seed) {
  if (max_tokens < 1) throw InvalidInput("HttpBackend::generate: max_tokens must be >= 1");

  nlohmann::json body{
      {"model", config_.model},
      {"messages", nlohmann::json::array({nlohmann::json{{"role", "user"}, {"content", prompt_text}}})},
      {"temperature", temperature},
      {"max_tokens", max_tokens},
  };
  if (seed) body["seed"] = *seed;
  const std::string payload = body.dump();

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
      const auto& choice = parsed.at("choices").at(0);
      GenerationResult out;
      if (choice.contains("message"))
        out.text = choice.at("message").at("content").get<std::string>();
      else
        out.text = choice.at("text").get<std::string>();
      out.seed_used = seed.value_or(0);
      return out;  // token_logprobs absent: can_logprob is false
    } catch (const std::exception& e) {
      last_error = std::string("bad response body: ") + e.what();
    }
  }

  throw BackendError("inference endpoint unreachable after " + std::to_string(attempts) +
                         " attempts (" + last_error + ")",
                     attempts, last_status);
}

}  // namespace ssr::policy
