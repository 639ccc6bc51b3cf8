#include "coldrec/http.hpp"

#include <cmath>
#include <thread>

#include <httplib.h>

namespace coldrec::model {

std::chrono::milliseconds RetryPolicy::backoff(int attempt, std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> dist(1.0 - jitter, 1.0 + jitter);
  const double base = static_cast<double>(base_delay.count()) * std::ldexp(1.0, attempt);
  return std::chrono::milliseconds(std::llround(base * dist(rng)));
}

RateLimiter::RateLimiter(double requests_per_second) {
  if (requests_per_second > 0) {
    interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / requests_per_second));
  }
}

void RateLimiter::acquire() {
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

std::string redact(std::string text, const std::optional<std::string>& token) {
  if (!token || token->empty()) return text;
  for (std::size_t pos = text.find(*token); pos != std::string::npos; pos = text.find(*token, pos)) {
    text.replace(pos, token->size(), "<redacted>");
  }
  return text;
}

HttpClient::HttpClient(std::string base_url, std::optional<std::string> bearer_token, RetryPolicy policy,
                       std::shared_ptr<RateLimiter> limiter, std::ostream* trace)
    : bearer_(std::move(bearer_token)),
      policy_(policy),
      limiter_(std::move(limiter)),
      trace_(trace),
      rng_(std::random_device{}()) {
  while (!base_url.empty() && base_url.back() == '/') base_url.pop_back();
  const auto scheme_end = base_url.find("://");
  const auto path_start = base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_port_ = base_url;
  } else {
    scheme_host_port_ = base_url.substr(0, path_start);
    path_prefix_ = base_url.substr(path_start);
  }
  if (scheme_host_port_.empty()) throw InputError("empty base URL");
}

HttpResult HttpClient::post_json(const std::string& path, const std::string& body) {
  const std::string full_path = path_prefix_ + path;
  httplib::Headers headers;
  if (bearer_) headers.emplace("Authorization", "Bearer " + *bearer_);
  if (trace_) {
    std::lock_guard lock(trace_mutex_);
    *trace_ << "[trace] POST " << scheme_host_port_ << full_path << "\n"
            << redact(body, bearer_) << "\n";
  }

  int last_status = 0;
  std::string last_kind = "transport";
  std::string last_detail;
  for (int attempt = 0; attempt < policy_.max_attempts; ++attempt) {
    if (limiter_) limiter_->acquire();
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(policy_.timeout);
    client.set_read_timeout(policy_.timeout);
    client.set_write_timeout(policy_.timeout);
    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(full_path, headers, body, "application/json");
    const auto elapsed = std::chrono::steady_clock::now() - started;

    bool retry = false;
    if (!res) {
      const auto err = res.error();
      last_status = 0;
      last_kind = (err == httplib::Error::ConnectionTimeout ||
                   (err == httplib::Error::Read && elapsed >= policy_.timeout))
                      ? "timeout"
                      : "transport";
      last_detail = httplib::to_string(err);
      retry = true;
    } else {
      if (trace_) {
        std::lock_guard lock(trace_mutex_);
        *trace_ << "[trace] <- " << res->status << "\n" << redact(res->body, bearer_) << "\n";
      }
      if (res->status >= 200 && res->status < 300) return {res->status, res->body, attempt + 1};
      last_status = res->status;
      last_kind = "http";
      last_detail = "HTTP " + std::to_string(res->status);
      retry = RetryPolicy::retryable_status(res->status);
    }
    if (!retry) throw ModelError("request to " + full_path + " failed: " + last_detail, last_status, attempt + 1, last_kind);
    if (attempt + 1 < policy_.max_attempts) {
      std::chrono::milliseconds wait;
      {
        std::lock_guard lock(rng_mutex_);
        wait = policy_.backoff(attempt, rng_);
      }
      std::this_thread::sleep_for(wait);
    }
  }
  throw ModelError("request to " + full_path + " failed after retries: " + last_detail, last_status,
                   policy_.max_attempts, last_kind);
}

}  // namespace coldrec::model
