#include "memlog/cli.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "memlog/agent.hpp"
#include "memlog/binio.hpp"
#include "memlog/pipeline.hpp"
#include "memlog/service.hpp"
#include "memlog/synthgen.hpp"

namespace memlog {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidSpec:
      return kExitUsage;
    case ErrorCode::SingleClassInput:
      return kExitSingleClass;
    case ErrorCode::NotJson:
    case ErrorCode::OversizeLog:
    case ErrorCode::EmptyDocument:
      return kExitLogParse;
    case ErrorCode::ModelLoadFailure:
    case ErrorCode::BadMagic:
    case ErrorCode::VersionMismatch:
    case ErrorCode::CorruptPayload:
      return kExitModelLoad;
    case ErrorCode::Io:
      return kExitIo;
    case ErrorCode::BindFailure:
      return kExitBind;
    case ErrorCode::WatchDirMissing:
      return kExitWatchDir;
    case ErrorCode::EmptyCorpus:
    case ErrorCode::VocabMismatch:
    case ErrorCode::ZeroVector:
    case ErrorCode::UnknownToken:
    case ErrorCode::TooFewRows:
    case ErrorCode::NonFiniteFeature:
    case ErrorCode::UnlabeledLog:
    case ErrorCode::InsufficientClassCount:
    case ErrorCode::LengthMismatch:
      return kExitData;
    default:
      return kExitInternal;
  }
}

namespace {

struct Corpus {
  std::vector<std::string> names;
  std::vector<CanonicalLog> logs;
};

Corpus load_corpus(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::Io, dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json" && !entry.is_directory()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  Corpus c;
  std::size_t cleaned = 0;
  for (const auto& f : files) {
    ParsedLog parsed;
    try {
      parsed = parse_log(binio::read_text_file(f));
    } catch (const Error& e) {
      throw Error(e.code(), f.filename().string() + ": " + e.what());
    }
    if (!parsed.report.empty()) ++cleaned;
    c.names.push_back(f.filename().string());
    c.logs.push_back(std::move(parsed.log));
  }
  if (cleaned) std::cerr << "memlog: " << cleaned << " of " << files.size() << " logs needed cleaning\n";
  return c;
}

nlohmann::json report_json(const Evaluation& ev) {
  return nlohmann::json::parse(metrics_json(ev.confusion, ev.metrics));
}

void write_roc(const Evaluation& ev, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  write_roc_csv(roc_points(ev.labels, ev.scores), out);
}

// Blocks SIGINT/SIGTERM in every thread started afterwards; one helper thread
// waits for them and runs `on_signal`.
class SignalWaiter {
 public:
  explicit SignalWaiter(std::function<void()> on_signal) {
    sigemptyset(&set_);
    sigaddset(&set_, SIGINT);
    sigaddset(&set_, SIGTERM);
    sigaddset(&set_, SIGUSR1);
    pthread_sigmask(SIG_BLOCK, &set_, nullptr);
    thread_ = std::thread([this, cb = std::move(on_signal)] {
      int sig = 0;
      sigwait(&set_, &sig);
      if (sig != SIGUSR1) cb();
    });
  }
  ~SignalWaiter() {
    pthread_kill(thread_.native_handle(), SIGUSR1);
    thread_.join();
  }

 private:
  sigset_t set_;
  std::thread thread_;
};

std::atomic<bool> g_agent_stop{false};
extern "C" void on_agent_signal(int) { g_agent_stop.store(true); }

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"memlog: runtime-log malware detection toolkit"};
  app.set_config("--config", "", "key=value config file; subcommand keys go in [gen]/[train]/... sections");
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 1;
  app.add_option("--seed", seed, "Seed for generation, shuffling and embedding training")->capture_default_str();

  // gen
  GenSpec gen;
  fs::path gen_out;
  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic labeled corpus");
  gen_cmd->add_option("--out", gen_out, "Output directory")->required();
  gen_cmd->add_option("--malicious", gen.n_malicious)->capture_default_str();
  gen_cmd->add_option("--benign", gen.n_benign)->capture_default_str();
  gen_cmd->add_option("--overlap", gen.overlap, "Shared indicator fraction")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  gen_cmd->add_option("--os-versions", gen.heterogeneity.n_os_versions)->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--exe-names", gen.heterogeneity.n_exe_names)->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--module-pool", gen.heterogeneity.n_module_pool)->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--families", gen.heterogeneity.n_malware_families)->check(CLI::PositiveNumber)->capture_default_str();

  // train
  PipelineParams pp;
  fs::path corpus_dir, embeddings_path, model_path, roc_csv, vectors_out;
  auto* train_cmd = app.add_subcommand("train", "Train embeddings and classifier on a corpus");
  train_cmd->add_option("--corpus", corpus_dir, "Directory of *.json logs")->required();
  train_cmd->add_option("--embeddings-out", embeddings_path)->required();
  train_cmd->add_option("--model-out", model_path)->required();
  train_cmd->add_option("--min-count", pp.min_count)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--window", pp.skipgram.window)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--negatives", pp.skipgram.negatives)->capture_default_str();
  train_cmd->add_option("--epochs", pp.skipgram.epochs)->capture_default_str();
  train_cmd->add_option("--lr", pp.skipgram.initial_lr)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--trees", pp.gbdt.trees)->capture_default_str();
  train_cmd->add_option("--depth", pp.gbdt.max_depth)->check(CLI::Range(0, 32))->capture_default_str();
  train_cmd->add_option("--shrinkage", pp.gbdt.shrinkage)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--lambda", pp.gbdt.lambda)->check(CLI::NonNegativeNumber)->capture_default_str();
  train_cmd->add_option("--min-leaf", pp.gbdt.min_leaf)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--vectors-out", vectors_out, "Also write all log vectors as CSV");
  train_cmd->add_option("--roc-csv", roc_csv, "Write validation ROC points as CSV");

  // --seed, --train-fraction and --test-size must match train for evaluate --holdout to replay its split.
  double threshold = kDefaultThreshold;
  train_cmd->add_option("--train-fraction", pp.split.train_malicious_fraction)->capture_default_str();
  train_cmd->add_option("--test-size", pp.test_size, "Balanced test set size; 0 picks a fifth of the smaller class")
      ->capture_default_str();
  train_cmd->add_option("--threshold", threshold)->capture_default_str();

  // evaluate
  fs::path vectors_in;
  bool holdout = false;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a corpus (or vector CSV) and report metrics");
  eval_cmd->add_option("--embeddings", embeddings_path);
  eval_cmd->add_option("--model", model_path)->required();
  auto* eval_corpus = eval_cmd->add_option("--corpus", corpus_dir, "Directory of *.json logs");
  auto* eval_vectors = eval_cmd->add_option("--vectors", vectors_in, "CSV from train --vectors-out");
  eval_corpus->excludes(eval_vectors);
  eval_cmd->add_flag("--holdout", holdout, "Score only the test side of the train-time split");
  eval_cmd->add_option("--train-fraction", pp.split.train_malicious_fraction)->capture_default_str();
  eval_cmd->add_option("--test-size", pp.test_size)->capture_default_str();
  eval_cmd->add_option("--threshold", threshold)->capture_default_str();
  eval_cmd->add_option("--roc-csv", roc_csv, "Write ROC points as CSV");

  // predict
  fs::path log_file;
  auto* predict_cmd = app.add_subcommand("predict", "Score one log file");
  predict_cmd->add_option("--embeddings", embeddings_path)->required();
  predict_cmd->add_option("--model", model_path)->required();
  predict_cmd->add_option("--threshold", threshold)->capture_default_str();
  predict_cmd->add_option("log", log_file, "Log JSON file")->required();

  // serve
  ServiceConfig svc;
  std::string bind = "127.0.0.1:8080";
  auto* serve_cmd = app.add_subcommand("serve", "Run the detection HTTP service");
  serve_cmd->add_option("--bind", bind)->capture_default_str();
  serve_cmd->add_option("--embeddings", svc.embeddings)->required();
  serve_cmd->add_option("--model", svc.model)->required();
  serve_cmd->add_option("--threshold", threshold)->capture_default_str();
  serve_cmd->add_option("--audit-log", svc.audit_log, "JSON-lines audit file");
  serve_cmd->add_option("--threads", svc.worker_threads)->check(CLI::PositiveNumber)->capture_default_str();
  serve_cmd->add_option("--max-bytes", svc.max_body_bytes, "Log size cap")->check(CLI::PositiveNumber)->capture_default_str();

  // agent
  AgentConfig ac;
  auto* agent_cmd = app.add_subcommand("agent", "Ship logs from a directory to the service");
  agent_cmd->add_option("--watch", ac.watch_dir)->required();
  agent_cmd->add_option("--server", ac.server_url, "Overridden by MEMLOG_SERVER")->capture_default_str();
  agent_cmd->add_option("--poll-ms", ac.poll_interval_ms)->capture_default_str();
  agent_cmd->add_option("--max-attempts", ac.retry.max_attempts)->check(CLI::PositiveNumber)->capture_default_str();
  agent_cmd->add_option("--backoff-ms", ac.retry.backoff_base_ms)->capture_default_str();
  agent_cmd->add_option("--timeout-ms", ac.request_timeout_ms)->capture_default_str();
  agent_cmd->add_option("--results", ac.results_file, "Defaults to <watch>/detections.jsonl");
  agent_cmd->add_flag("--exit-when-idle", ac.exit_when_idle, "Stop after a poll finds no files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) {
      gen.seed = seed;
      const auto logs = generate_corpus(gen);
      write_corpus(logs, gen_out);
      std::cout << nlohmann::json{{"out", gen_out.string()},
                                  {"malicious", gen.n_malicious},
                                  {"benign", gen.n_benign},
                                  {"overlap", gen.overlap},
                                  {"seed", seed}}
                       .dump()
                << "\n";
      return kExitOk;
    }

    if (train_cmd->parsed()) {
      check_threshold(threshold);
      pp.threshold = threshold;
      pp.skipgram.seed = seed;
      pp.split.shuffle_seed = seed;
      const Corpus corpus = load_corpus(corpus_dir);
      const PipelineResult r = run_training_pipeline(corpus.logs, pp);
      save_embeddings(r.embeddings, embeddings_path);
      save_model(r.model, model_path);
      if (!vectors_out.empty()) {
        std::ofstream out(vectors_out, std::ios::binary);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + vectors_out.string());
        write_vector_csv(r.data, out);
      }
      if (!roc_csv.empty()) write_roc(r.validation, roc_csv);
      auto j = report_json(r.validation);
      j["model_version"] = r.model.version;
      j["vocab_size"] = r.embeddings.vocab.size();
      j["train_rows"] = r.split.train.size();
      j["test_rows"] = r.split.test.size();
      std::cout << j.dump(2) << "\n";
      return kExitOk;
    }

    if (eval_cmd->parsed()) {
      check_threshold(threshold);
      GbdtModel model;
      try {
        model = load_model(model_path);
      } catch (const Error& e) {
        throw Error(ErrorCode::ModelLoadFailure, model_path.string() + ": " + e.what());
      }
      VectorDataset data;
      if (!vectors_in.empty()) {
        std::ifstream in(vectors_in, std::ios::binary);
        if (!in) throw Error(ErrorCode::Io, "cannot read " + vectors_in.string());
        data = read_vector_csv(in);
      } else if (!corpus_dir.empty()) {
        if (embeddings_path.empty()) throw Error(ErrorCode::InvalidArgument, "--corpus needs --embeddings");
        EmbeddingModel emb;
        try {
          emb = load_embeddings(embeddings_path);
        } catch (const Error& e) {
          throw Error(ErrorCode::ModelLoadFailure, embeddings_path.string() + ": " + e.what());
        }
        data = vectorize_corpus(load_corpus(corpus_dir).logs, emb);
      } else {
        throw Error(ErrorCode::InvalidArgument, "evaluate needs --corpus or --vectors");
      }
      std::vector<std::size_t> rows;
      if (holdout) {
        pp.split.shuffle_seed = seed;
        const std::size_t test_size = pp.test_size ? pp.test_size : default_test_size(data.labels);
        rows = holdout_split(data.labels, pp.split, test_size).test;
      }
      const Evaluation ev = evaluate_rows(model, data, rows, threshold);
      if (!roc_csv.empty()) write_roc(ev, roc_csv);
      auto j = report_json(ev);
      j["model_version"] = model.version;
      j["rows"] = ev.labels.size();
      std::cout << j.dump(2) << "\n";
      return kExitOk;
    }

    if (predict_cmd->parsed()) {
      const Detector detector = Detector::load(embeddings_path, model_path, threshold);
      const DetectionResult r = detector.detect(binio::read_text_file(log_file));
      std::cout << to_json(r) << "\n";
      return kExitOk;
    }

    if (serve_cmd->parsed()) {
      svc.threshold = threshold;
      parse_bind(bind, svc);
      std::atomic<DetectionService*> target{nullptr};
      std::atomic<bool> signalled{false};
      // Installed before any service thread exists so none of them sees the signals.
      SignalWaiter signals([&] {
        signalled = true;
        if (auto* s = target.load()) s->stop();
      });
      DetectionService service(svc);
      service.load_models();
      const int port = service.bind();
      target = &service;
      if (signalled) return kExitOk;
      std::cerr << "memlog: serving on " << svc.host << ":" << port << "\n";
      service.run();
      std::cerr << "memlog: stopped\n";
      return kExitOk;
    }

    if (agent_cmd->parsed()) {
      ac.server_url = resolve_server_url(ac.server_url);
      Agent agent(ac);
      std::signal(SIGINT, on_agent_signal);
      std::signal(SIGTERM, on_agent_signal);
      const AgentStats stats = agent.run(g_agent_stop);
      std::cout << nlohmann::json{{"processed", stats.processed}, {"failed", stats.failed}, {"requests", stats.requests}}
                       .dump()
                << "\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "memlog: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "memlog: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace memlog
