#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

namespace memlog {

struct RetryPolicy {
  unsigned max_attempts = 5;  // total tries per file, including the first
  unsigned backoff_base_ms = 200;
  unsigned backoff_max_ms = 10'000;
};

struct AgentConfig {
  std::filesystem::path watch_dir;
  std::string server_url = "http://127.0.0.1:8080";
  unsigned poll_interval_ms = 500;
  RetryPolicy retry;
  std::filesystem::path results_file;  // defaults to <watch_dir>/detections.jsonl
  unsigned request_timeout_ms = 10'000;
  bool exit_when_idle = false;  // return once a poll finds nothing to do
};

struct AgentStats {
  std::size_t processed = 0;
  std::size_t failed = 0;
  std::size_t requests = 0;
};

// MEMLOG_SERVER, when set and non-empty, wins over the configured URL.
std::string resolve_server_url(const std::string& configured);

// Delay before retry k (k = 1 for the first retry): base * 2^(k-1), capped.
unsigned backoff_delay_ms(const RetryPolicy& policy, unsigned retry);

// Sequential, single-threaded directory shipper. Each *.json file directly in
// the watch directory is POSTed to /v1/detect; the verdict goes to the results
// file and the log moves to processed/. Files the server rejects (4xx), that
// cannot be read, or that exhaust their retries move to failed/. Writers should
// create logs under another name and rename them to *.json when complete.
class Agent {
 public:
  explicit Agent(AgentConfig config);  // throws WatchDirMissing, Io

  // One pass over the directory; returns the number of files handled.
  std::size_t poll_once(const std::atomic<bool>* stop = nullptr);
  // Polls until *stop is set (or the directory is idle with exit_when_idle).
  AgentStats run(const std::atomic<bool>& stop);

  const AgentStats& stats() const { return stats_; }
  const AgentConfig& config() const { return config_; }

 private:
  enum class Outcome { Done, Rejected, Exhausted, Stopped };
  Outcome ship(const std::filesystem::path& file, const std::string& body, std::string& response,
               const std::atomic<bool>* stop);
  void move_to(const std::filesystem::path& file, const std::filesystem::path& dir);

  AgentConfig config_;
  std::filesystem::path processed_dir_;
  std::filesystem::path failed_dir_;
  AgentStats stats_;
};

}  // namespace memlog
