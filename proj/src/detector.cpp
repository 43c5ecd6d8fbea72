#include "memlog/detector.hpp"

#include <chrono>

#include "json.hpp"
#include "memlog/error.hpp"
#include "memlog/tokenizer.hpp"
#include "memlog/vectorizer.hpp"

namespace memlog {

std::string to_json(const DetectionResult& r) {
  nlohmann::json j = {{"score", r.score},
                      {"verdict", to_string(r.verdict)},
                      {"threshold", r.threshold},
                      {"model_version", r.model_version},
                      {"latency_ms", r.latency_ms}};
  return j.dump();
}

void check_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "threshold must be strictly between 0 and 1");
  }
}

bool is_parse_error(ErrorCode code) {
  return code == ErrorCode::NotJson || code == ErrorCode::OversizeLog || code == ErrorCode::EmptyDocument;
}

Detector::Detector(EmbeddingModel embeddings, GbdtModel model, double threshold, ParseOptions parse)
    : embeddings_(std::move(embeddings)), model_(std::move(model)), threshold_(threshold), parse_(parse) {
  check_threshold(threshold);
  if (model_.feature_count != kLogVectorDim || embeddings_.dim != kEmbeddingDim) {
    throw Error(ErrorCode::ModelLoadFailure, "model expects " + std::to_string(model_.feature_count) +
                                                 " features; embeddings give " + std::to_string(kLogVectorDim));
  }
}

Detector Detector::load(const std::filesystem::path& embeddings, const std::filesystem::path& model, double threshold,
                        ParseOptions parse) {
  check_threshold(threshold);
  EmbeddingModel e;
  GbdtModel m;
  try {
    e = load_embeddings(embeddings);
  } catch (const Error& err) {
    throw Error(ErrorCode::ModelLoadFailure, embeddings.string() + ": " + err.what());
  }
  try {
    m = load_model(model);
  } catch (const Error& err) {
    throw Error(ErrorCode::ModelLoadFailure, model.string() + ": " + err.what());
  }
  return Detector(std::move(e), std::move(m), threshold, parse);
}

DetectionResult Detector::detect(std::string_view raw) const {
  const auto start = std::chrono::steady_clock::now();
  const ParsedLog parsed = parse_log(raw, parse_);
  DetectionResult r = detect(parsed.log);
  r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

DetectionResult Detector::detect(const CanonicalLog& log) const {
  const auto start = std::chrono::steady_clock::now();
  const LogVector v = vectorize_log(tokenize(log), embeddings_);
  DetectionResult r;
  r.score = predict(model_, v.values);
  r.verdict = classify(r.score, threshold_);
  r.threshold = threshold_;
  r.model_version = model_.version;
  r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace memlog
