#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>

#include "httplib.h"

namespace memlog::testing {

// Minimal /v1/detect endpoint that counts what it receives. By default it
// answers a fixed benign verdict; `fail_first` requests get a 503 instead.
class StubServer {
 public:
  explicit StubServer(int fail_first = 0) : fail_first_(fail_first) {
    server_.Post("/v1/detect", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++requests_;
      if (n <= fail_first_) {
        res.status = 503;
        res.set_content(R"({"error":"NOT_READY"})", "application/json");
        return;
      }
      {
        std::lock_guard lock(mu_);
        ++per_source_[req.get_header_value("X-Source-File")];
        bytes_ += req.body.size();
      }
      res.set_content(R"({"score":0.1,"verdict":"benign","threshold":0.75,"model_version":"stub","latency_ms":0})",
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  int port() const { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_; }
  std::map<std::string, int> per_source() const {
    std::lock_guard lock(mu_);
    return per_source_;
  }
  std::size_t bytes() const {
    std::lock_guard lock(mu_);
    return bytes_;
  }

 private:
  httplib::Server server_;
  int fail_first_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  mutable std::mutex mu_;
  std::map<std::string, int> per_source_;
  std::size_t bytes_ = 0;
  std::thread thread_;
};

}  // namespace memlog::testing
