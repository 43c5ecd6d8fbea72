#include "memlog/agent.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "memlog/binio.hpp"
#include "memlog/error.hpp"

namespace memlog {

namespace fs = std::filesystem;

namespace {

// Sleeps in short slices so a stop request is noticed promptly.
bool interruptible_sleep(unsigned ms, const std::atomic<bool>* stop) {
  const auto until = std::chrono::steady_clock::now() + std::chrono::milliseconds(ms);
  while (std::chrono::steady_clock::now() < until) {
    if (stop && stop->load()) return false;
    std::this_thread::sleep_for(std::min(std::chrono::milliseconds(20),
                                         std::chrono::duration_cast<std::chrono::milliseconds>(
                                             until - std::chrono::steady_clock::now()) +
                                             std::chrono::milliseconds(1)));
  }
  return !(stop && stop->load());
}

std::vector<fs::path> pending_files(const fs::path& dir) {
  std::vector<fs::path> out;
  std::error_code ec;
  for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
    const fs::path& p = it->path();
    if (p.extension() != ".json") continue;
    std::error_code type_ec;
    if (it->is_directory(type_ec)) continue;
    out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::string resolve_server_url(const std::string& configured) {
  const char* env = std::getenv("MEMLOG_SERVER");
  return env && *env ? std::string(env) : configured;
}

unsigned backoff_delay_ms(const RetryPolicy& policy, unsigned retry) {
  if (retry == 0) return 0;
  const unsigned shift = std::min(retry - 1, 20u);
  const unsigned long long d = static_cast<unsigned long long>(policy.backoff_base_ms) << shift;
  return static_cast<unsigned>(std::min<unsigned long long>(d, policy.backoff_max_ms));
}

Agent::Agent(AgentConfig config) : config_(std::move(config)) {
  std::error_code ec;
  if (!fs::is_directory(config_.watch_dir, ec)) {
    throw Error(ErrorCode::WatchDirMissing, config_.watch_dir.string() + " is not a directory");
  }
  if (config_.results_file.empty()) config_.results_file = config_.watch_dir / "detections.jsonl";
  if (config_.retry.max_attempts == 0) throw Error(ErrorCode::InvalidArgument, "max_attempts must be >= 1");
  processed_dir_ = config_.watch_dir / "processed";
  failed_dir_ = config_.watch_dir / "failed";
  for (const auto& d : {processed_dir_, failed_dir_}) {
    fs::create_directories(d, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + d.string() + ": " + ec.message());
  }
  httplib::Client probe(config_.server_url);
  if (!probe.is_valid()) throw Error(ErrorCode::InvalidArgument, "unusable server url '" + config_.server_url + "'");
}

void Agent::move_to(const fs::path& file, const fs::path& dir) {
  std::error_code ec;
  fs::rename(file, dir / file.filename(), ec);
  if (ec) {
    // Leaving the file in place would resend it on the next poll.
    fs::remove(file, ec);
    std::cerr << "agent: could not move " << file << "; removed it\n";
  }
}

Agent::Outcome Agent::ship(const fs::path& file, const std::string& body, std::string& response,
                           const std::atomic<bool>* stop) {
  const auto timeout = std::chrono::milliseconds(config_.request_timeout_ms);
  const std::string name = file.filename().string();
  for (unsigned attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    if (attempt > 1 && !interruptible_sleep(backoff_delay_ms(config_.retry, attempt - 1), stop)) {
      return Outcome::Stopped;
    }
    httplib::Client client(config_.server_url);
    client.set_tcp_nodelay(true);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    ++stats_.requests;
    const httplib::Headers headers = {{"X-Source-File", name}, {"X-Request-Id", name}};
    auto res = client.Post("/v1/detect", headers, body, "application/json");
    if (!res) {
      std::cerr << "agent: " << name << ": attempt " << attempt << ": " << httplib::to_string(res.error()) << "\n";
      continue;
    }
    if (res->status == 200) {
      response = res->body;
      return Outcome::Done;
    }
    std::cerr << "agent: " << name << ": attempt " << attempt << ": HTTP " << res->status << "\n";
    if (res->status >= 400 && res->status < 500) return Outcome::Rejected;
  }
  return Outcome::Exhausted;
}

std::size_t Agent::poll_once(const std::atomic<bool>* stop) {
  std::size_t handled = 0;
  for (const auto& file : pending_files(config_.watch_dir)) {
    if (stop && stop->load()) break;
    std::string body;
    try {
      body = binio::read_text_file(file);
    } catch (const Error& e) {
      std::cerr << "agent: " << e.what() << "\n";
      move_to(file, failed_dir_);
      ++stats_.failed;
      ++handled;
      continue;
    }
    std::string response;
    const Outcome outcome = ship(file, body, response, stop);
    if (outcome == Outcome::Stopped) break;
    if (outcome == Outcome::Done) {
      auto line = nlohmann::json::parse(response, nullptr, false);
      if (!line.is_object()) line = nlohmann::json{{"raw_response", response}};
      line["source_file"] = file.filename().string();
      std::ofstream out(config_.results_file, std::ios::app | std::ios::binary);
      out << line.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
      if (!out) throw Error(ErrorCode::Io, "cannot append to " + config_.results_file.string());
      move_to(file, processed_dir_);
      ++stats_.processed;
    } else {
      move_to(file, failed_dir_);
      ++stats_.failed;
    }
    ++handled;
  }
  return handled;
}

AgentStats Agent::run(const std::atomic<bool>& stop) {
  while (!stop.load()) {
    const std::size_t handled = poll_once(&stop);
    if (handled == 0 && config_.exit_when_idle) break;
    if (handled == 0 && !interruptible_sleep(config_.poll_interval_ms, &stop)) break;
  }
  return stats_;
}

}  // namespace memlog
