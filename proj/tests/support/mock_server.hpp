#pragma once

// In-process HTTP server on an ephemeral localhost port.

#include <arpa/inet.h>
#include <httplib.h>
#include <json.hpp>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <functional>
#include <string>
#include <thread>

namespace mock {

using Handler = std::function<nlohmann::json(const nlohmann::json&)>;

class Server {
 public:
  Server() { port_ = svr_.bind_to_any_port("127.0.0.1"); }
  ~Server() { stop(); }
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Registers a JSON handler; a handler returning null answers 500.
  void post(const std::string& path, Handler h) {
    svr_.Post(path, [this, h](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      const auto out = h(nlohmann::json::parse(req.body));
      if (out.is_null()) {
        res.status = 500;
        return;
      }
      res.set_content(out.dump(), "application/json");
    });
  }

  void start() {
    thread_ = std::thread([this] { svr_.listen_after_bind(); });
    svr_.wait_until_ready();
  }

  void stop() {
    if (thread_.joinable()) {
      svr_.stop();
      thread_.join();
    }
  }

  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }
  int requests() const { return requests_; }

 private:
  httplib::Server svr_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> requests_{0};
};

/// A URL nothing listens on: an ephemeral port that was bound and released, so connects are refused.
inline std::string dead_url() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  socklen_t len = sizeof(addr);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), len);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return "http://127.0.0.1:" + std::to_string(ntohs(addr.sin_port)) + "/dead";
}

}  // namespace mock
