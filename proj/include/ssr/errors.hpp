#pragma once

#include <stdexcept>
#include <string>

namespace ssr {

// Precondition or argument violation (empty inputs, out-of-range values,
// mismatched shapes).
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// extract_answer was called on a response that fails check_format.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A backend was handed a prompt it cannot recognize as one of the known
// templates.
struct ProtocolMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A completion is outside the support of the policy being scored.
struct InvalidCompletion : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Requested an operation the backend does not implement (e.g. gradients on a
// remote backend).
struct UnsupportedBackend : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Remote inference failure, after retries were exhausted.
struct BackendError : std::runtime_error {
  BackendError(const std::string& what, int attempts_made, int last_status_code)
      : std::runtime_error(what), attempts(attempts_made), last_status(last_status_code) {}
  int attempts = 0;
  int last_status = 0;  // HTTP status of the last attempt, 0 if no response
};

// External scoring service failure, after retries were exhausted.
struct ScorerUnavailable : std::runtime_error {
  ScorerUnavailable(const std::string& what, int attempts_made)
      : std::runtime_error(what), attempts(attempts_made) {}
  int attempts = 0;
};

}  // namespace ssr
