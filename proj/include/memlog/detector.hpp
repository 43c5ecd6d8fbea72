#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "memlog/embedding.hpp"
#include "memlog/error.hpp"
#include "memlog/gbdt.hpp"
#include "memlog/logmodel.hpp"

namespace memlog {

inline constexpr double kDefaultThreshold = 0.75;

struct DetectionResult {
  double score = 0.0;
  Label verdict = Label::Benign;
  double threshold = kDefaultThreshold;
  std::string model_version;
  double latency_ms = 0.0;
};

// Compact JSON object with the fields above; verdict is "malicious"/"benign".
std::string to_json(const DetectionResult& result);

// Throws InvalidArgument unless 0 < threshold < 1.
void check_threshold(double threshold);

// Immutable model pair plus threshold. detect() is safe to call concurrently.
class Detector {
 public:
  Detector(EmbeddingModel embeddings, GbdtModel model, double threshold, ParseOptions parse = {});

  // Any failure to read or decode either file becomes ModelLoadFailure.
  static Detector load(const std::filesystem::path& embeddings, const std::filesystem::path& model, double threshold,
                       ParseOptions parse = {});

  // parse_log -> tokenize -> vectorize_log -> predict -> classify. Parse
  // failures surface as Error with NotJson, OversizeLog or EmptyDocument.
  DetectionResult detect(std::string_view raw) const;
  DetectionResult detect(const CanonicalLog& log) const;

  const std::string& model_version() const { return model_.version; }
  double threshold() const { return threshold_; }

 private:
  EmbeddingModel embeddings_;
  GbdtModel model_;
  double threshold_;
  ParseOptions parse_;
};

bool is_parse_error(ErrorCode code);

}  // namespace memlog
