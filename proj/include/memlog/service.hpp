#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>

#include "memlog/detector.hpp"

namespace httplib {
class Server;
}

namespace memlog {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path embeddings;
  std::filesystem::path model;
  double threshold = kDefaultThreshold;
  std::filesystem::path audit_log;  // empty disables auditing
  std::size_t worker_threads = 8;
  std::size_t max_body_bytes = 500 * 1024;
};

// "host:port" or ":port". Throws InvalidArgument.
void parse_bind(std::string_view bind, ServiceConfig& config);

// Append-only JSON-lines file fed through a queue; one thread owns the stream.
class AuditLog {
 public:
  AuditLog() = default;
  explicit AuditLog(const std::filesystem::path& path);  // throws Io
  ~AuditLog();
  AuditLog(const AuditLog&) = delete;
  AuditLog& operator=(const AuditLog&) = delete;

  void append(std::string line);
  // Blocks until every queued line is written.
  void flush();

 private:
  void writer_loop();

  std::ofstream out_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable drained_;
  std::deque<std::string> queue_;
  bool writing_ = false;
  bool closing_ = false;
  std::thread writer_;
};

// HTTP front end: POST /v1/detect, GET /v1/health.
class DetectionService {
 public:
  explicit DetectionService(ServiceConfig config);
  ~DetectionService();
  DetectionService(const DetectionService&) = delete;
  DetectionService& operator=(const DetectionService&) = delete;

  // Loads both model files from the config. Throws ModelLoadFailure.
  void load_models();
  void set_detector(std::shared_ptr<const Detector> detector);
  bool ready() const;

  // Binds the listening socket and returns the port. Throws BindFailure.
  int bind();
  // Serves until stop(); bind() must have succeeded.
  void run();
  // Stops accepting, lets in-flight requests finish. Safe from any thread.
  void stop();

  const ServiceConfig& config() const { return config_; }

 private:
  std::shared_ptr<const Detector> detector() const;
  void install_routes();

  ServiceConfig config_;
  std::unique_ptr<httplib::Server> server_;
  std::unique_ptr<AuditLog> audit_;
  mutable std::mutex detector_mu_;
  std::shared_ptr<const Detector> detector_;
  std::atomic<std::uint64_t> next_seq_{0};
  std::atomic<bool> running_{false};
  std::atomic<bool> stop_requested_{false};
};

}  // namespace memlog
