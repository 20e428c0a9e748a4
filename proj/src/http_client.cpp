#include "urbanforge/http_client.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include <httplib.h>

namespace urbanforge {

namespace {

constexpr std::string_view kScheme = "http://";

// Releases a concurrency slot on scope exit.
struct SlotGuard {
  std::counting_semaphore<64>& sem;
  explicit SlotGuard(std::counting_semaphore<64>& s) : sem(s) { sem.acquire(); }
  ~SlotGuard() { sem.release(); }
};

}  // namespace

HttpClient::HttpClient(EndpointConfig cfg, ErrorCode unavailable_code)
    : cfg_(std::move(cfg)), unavailable_(unavailable_code) {
  if (!cfg_.url.starts_with(kScheme))
    throw Error(ErrorCode::Config, "endpoint url must start with http://: '" + cfg_.url + "'");
  if (!(cfg_.timeout_s > 0)) throw Error(ErrorCode::Config, "endpoint timeout must be positive");
  if (cfg_.retries < 0) throw Error(ErrorCode::Config, "endpoint retries must be >= 0");
  const std::string rest = cfg_.url.substr(kScheme.size());
  const auto slash = rest.find('/');
  const std::string authority = rest.substr(0, slash);
  if (authority.empty()) throw Error(ErrorCode::Config, "endpoint url has no host: '" + cfg_.url + "'");
  host_ = std::string(kScheme) + authority;
  path_ = slash == std::string::npos ? "/" : rest.substr(slash);
  slots_ = std::make_shared<std::counting_semaphore<64>>(std::clamp(cfg_.max_in_flight, 1, 64));
}

std::string HttpClient::post_json(const std::string& body) const {
  SlotGuard guard(*slots_);
  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 << std::min(attempt, 5)));
    httplib::Client cli(host_);
    const auto timeout = std::chrono::duration<double>(cfg_.timeout_s);
    cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    cli.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    auto res = cli.Post(path_, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    last_error = "HTTP status " + std::to_string(res->status);
  }
  throw Error(unavailable_, cfg_.url + " unreachable after " + std::to_string(cfg_.retries + 1) +
                                " attempt(s): " + last_error);
}

}  // namespace urbanforge
