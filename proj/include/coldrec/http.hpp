#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <string>

#include "coldrec/error.hpp"

namespace coldrec::model {

// Failure talking to a remote backend. `status` is 0 when no HTTP response
// arrived; `kind` is one of "http", "transport", "timeout", "protocol".
class ModelError : public Error {
 public:
  ModelError(const std::string& message, int status, int attempts, std::string kind)
      : Error(message + " (kind=" + kind + ", status=" + std::to_string(status) +
              ", attempts=" + std::to_string(attempts) + ")"),
        status_(status),
        attempts_(attempts),
        kind_(std::move(kind)) {}

  int status() const { return status_; }
  int attempts() const { return attempts_; }
  const std::string& kind() const { return kind_; }

 private:
  int status_;
  int attempts_;
  std::string kind_;
};

// Up to `max_attempts`, sleeping base_delay * 2^a with +-jitter between
// attempts. Retries 429, 5xx and transport errors; other 4xx fail fast.
struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  double jitter = 0.2;
  std::chrono::milliseconds timeout{120000};

  static bool retryable_status(int status) { return status == 429 || (status >= 500 && status <= 599); }
  // Delay before attempt `attempt + 1`, given `attempt` (0-based) failed.
  std::chrono::milliseconds backoff(int attempt, std::mt19937_64& rng) const;
};

// Minimum spacing between request starts, shared by all callers.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second);
  void acquire();

 private:
  std::mutex mutex_;
  std::chrono::steady_clock::duration interval_{};
  std::chrono::steady_clock::time_point next_{};
};

struct HttpResult {
  int status = 0;
  std::string body;
  int attempts = 0;
};

// JSON POST client against `{base_url}{path}`. A new connection per call
// keeps instances safe to share across threads.
class HttpClient {
 public:
  HttpClient(std::string base_url, std::optional<std::string> bearer_token, RetryPolicy policy,
             std::shared_ptr<RateLimiter> limiter = nullptr, std::ostream* trace = nullptr);

  // Throws ModelError once retries are exhausted or on a non-retryable status.
  HttpResult post_json(const std::string& path, const std::string& body);

 private:
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::optional<std::string> bearer_;
  RetryPolicy policy_;
  std::shared_ptr<RateLimiter> limiter_;
  std::ostream* trace_;
  std::mutex trace_mutex_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
};

// Replaces the bearer token in `text` with "<redacted>".
std::string redact(std::string text, const std::optional<std::string>& token);

}  // namespace coldrec::model
