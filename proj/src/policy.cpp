#include "ssr/policy.hpp"

#include "ssr/errors.hpp"

namespace ssr::policy {

std::vector<double> PolicyBackend::score_logprobs(const std::string&, const std::string&, double) {
  throw UnsupportedBackend(identity() + " cannot score log-probabilities");
}

}  // namespace ssr::policy
