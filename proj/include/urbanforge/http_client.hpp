#pragma once

#include <memory>
#include <semaphore>
#include <string>

#include "urbanforge/error.hpp"

namespace urbanforge {

inline constexpr int kDefaultMaxInFlight = 2;

struct EndpointConfig {
  /// http://host[:port]/path; empty means no endpoint.
  std::string url;
  double timeout_s = 120.0;
  int retries = 2;
  int max_in_flight = kDefaultMaxInFlight;

  bool configured() const { return !url.empty(); }
};

/// JSON-over-HTTP POST client with bounded retries and a cap on concurrent in-flight requests.
/// Copies share the same concurrency limit.
class HttpClient {
 public:
  /// Throws Error(Config) for a malformed URL or non-positive timeout.
  HttpClient(EndpointConfig cfg, ErrorCode unavailable_code);

  /// Posts `body` and returns the response body of the first 2xx reply. Transport failures
  /// and non-2xx replies are retried; exhaustion throws the unavailable code.
  std::string post_json(const std::string& body) const;

  const EndpointConfig& config() const { return cfg_; }

 private:
  EndpointConfig cfg_;
  ErrorCode unavailable_;
  std::string host_;
  std::string path_;
  std::shared_ptr<std::counting_semaphore<64>> slots_;
};

}  // namespace urbanforge
