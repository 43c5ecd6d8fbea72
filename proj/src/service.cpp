#include "memlog/service.hpp"

#include <charconv>
#include <chrono>

#include "httplib.h"
#include "json.hpp"
#include "memlog/error.hpp"

namespace memlog {

namespace {

using nlohmann::json;

// Header values and error text may carry arbitrary bytes.
std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

std::string error_body(std::string_view code, std::string_view message, const std::string& request_id) {
  return dump(json{{"error", code}, {"message", message}, {"request_id", request_id}});
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string body_digest(std::string_view body) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : body) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

void parse_bind(std::string_view bind, ServiceConfig& config) {
  const auto colon = bind.rfind(':');
  if (colon == std::string_view::npos) throw Error(ErrorCode::InvalidArgument, "bind must be host:port");
  const std::string_view port = bind.substr(colon + 1);
  int value = -1;
  auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc() || ptr != port.data() + port.size() || value < 0 || value > 65535) {
    throw Error(ErrorCode::InvalidArgument, "bad port in bind address '" + std::string(bind) + "'");
  }
  config.port = value;
  if (colon > 0) config.host = std::string(bind.substr(0, colon));
}

AuditLog::AuditLog(const std::filesystem::path& path) : out_(path, std::ios::app | std::ios::binary) {
  if (!out_) throw Error(ErrorCode::Io, "cannot open audit log " + path.string());
  writer_ = std::thread([this] { writer_loop(); });
}

AuditLog::~AuditLog() {
  {
    std::lock_guard lock(mu_);
    closing_ = true;
  }
  cv_.notify_all();
  if (writer_.joinable()) writer_.join();
}

void AuditLog::append(std::string line) {
  if (!writer_.joinable()) return;
  {
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(line));
  }
  cv_.notify_one();
}

void AuditLog::flush() {
  std::unique_lock lock(mu_);
  drained_.wait(lock, [this] { return queue_.empty() && !writing_; });
}

void AuditLog::writer_loop() {
  std::unique_lock lock(mu_);
  for (;;) {
    cv_.wait(lock, [this] { return closing_ || !queue_.empty(); });
    if (queue_.empty() && closing_) break;
    std::deque<std::string> batch;
    batch.swap(queue_);
    writing_ = true;
    lock.unlock();
    for (const auto& line : batch) out_ << line << '\n';
    out_.flush();
    lock.lock();
    writing_ = false;
    if (queue_.empty()) drained_.notify_all();
  }
  drained_.notify_all();
}

DetectionService::DetectionService(ServiceConfig config)
    : config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
  check_threshold(config_.threshold);
  if (!config_.audit_log.empty()) audit_ = std::make_unique<AuditLog>(config_.audit_log);
  const std::size_t workers = std::max<std::size_t>(1, config_.worker_threads);
  server_->new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
  // httplib defaults to SO_REUSEPORT, which lets a second service share a taken port.
  server_->set_tcp_nodelay(true);
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  // Leave room above the log cap so oversize bodies reach parse_log and get a LOG_PARSE answer.
  server_->set_payload_max_length(config_.max_body_bytes * 2 + 1024);
  install_routes();
}

DetectionService::~DetectionService() { stop(); }

void DetectionService::load_models() {
  set_detector(std::make_shared<const Detector>(Detector::load(config_.embeddings, config_.model, config_.threshold,
                                                               ParseOptions{config_.max_body_bytes})));
}

void DetectionService::set_detector(std::shared_ptr<const Detector> detector) {
  std::lock_guard lock(detector_mu_);
  detector_ = std::move(detector);
}

std::shared_ptr<const Detector> DetectionService::detector() const {
  std::lock_guard lock(detector_mu_);
  return detector_;
}

bool DetectionService::ready() const { return detector() != nullptr; }

int DetectionService::bind() {
  const int port = config_.port == 0 ? server_->bind_to_any_port(config_.host)
                                     : (server_->bind_to_port(config_.host, config_.port) ? config_.port : -1);
  if (port < 0) {
    throw Error(ErrorCode::BindFailure, "cannot bind " + config_.host + ":" + std::to_string(config_.port));
  }
  config_.port = port;
  return port;
}

void DetectionService::run() {
  running_ = true;
  if (!stop_requested_) server_->listen_after_bind();
  running_ = false;
  if (audit_) audit_->flush();
}

void DetectionService::stop() {
  stop_requested_ = true;
  while (running_ && !server_->is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
  server_->stop();
}

void DetectionService::install_routes() {
  server_->Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
    const auto d = detector();
    if (!d) {
      res.status = 503;
      res.set_content(json{{"status", "not-ready"}}.dump(), "application/json");
      return;
    }
    res.set_content(json{{"status", "ready"}, {"model_version", d->model_version()}, {"threshold", d->threshold()}}.dump(),
                    "application/json");
  });

  server_->Post("/v1/detect", [this](const httplib::Request& req, httplib::Response& res) {
    std::string request_id = req.get_header_value("X-Request-Id");
    if (request_id.empty()) request_id = "req-" + std::to_string(next_seq_.fetch_add(1));
    res.set_header("X-Request-Id", request_id);

    json audit = {{"ts_ms", now_ms()},
                  {"request_id", request_id},
                  {"bytes", req.body.size()},
                  {"body_fnv", body_digest(req.body)}};
    const std::string source = req.get_header_value("X-Source-File");
    if (!source.empty()) audit["source_file"] = source;

    const auto d = detector();
    if (!d) {
      res.status = 503;
      res.set_content(error_body("NOT_READY", "models not loaded", request_id), "application/json");
      audit["status"] = 503;
    } else {
      try {
        const DetectionResult r = d->detect(req.body);
        json body = json::parse(to_json(r));
        body["request_id"] = request_id;
        res.set_content(dump(body), "application/json");
        audit["status"] = 200;
        audit["score"] = r.score;
        audit["verdict"] = to_string(r.verdict);
      } catch (const Error& e) {
        const bool parse = is_parse_error(e.code());
        res.status = parse ? 400 : 500;
        res.set_content(error_body(parse ? "LOG_PARSE" : "INTERNAL", e.what(), request_id), "application/json");
        audit["status"] = res.status;
        audit["error"] = to_string(e.code());
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(error_body("INTERNAL", e.what(), request_id), "application/json");
        audit["status"] = 500;
      }
    }
    if (audit_) audit_->append(dump(audit));
  });

  server_->set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    res.status = 500;
    res.set_content(error_body("INTERNAL", "unhandled exception", ""), "application/json");
  });
}

}  // namespace memlog
