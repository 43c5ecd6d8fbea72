#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "memlog/detector.hpp"
#include "memlog/embedding.hpp"
#include "memlog/evaluation.hpp"
#include "memlog/gbdt.hpp"
#include "memlog/vectorizer.hpp"

namespace memlog {

struct PipelineParams {
  std::uint64_t min_count = 2;
  SkipGramParams skipgram;
  GbdtParams gbdt;
  SplitSpec split;
  std::size_t test_size = 0;  // 0: default_test_size(labels)
  double threshold = kDefaultThreshold;
};

struct Evaluation {
  std::vector<Label> labels;
  std::vector<double> scores;
  ConfusionMatrix confusion;
  MetricsReport metrics;  // auc is null when only one class is present
};

struct PipelineResult {
  EmbeddingModel embeddings;
  GbdtModel model;
  VectorDataset data;  // every log, in input order
  HoldoutSplit split;
  Evaluation validation;  // on split.test
};

// A fifth of the smaller class per side of the balanced test set (at least 1).
std::size_t default_test_size(std::span<const Label> labels);

// build_vocab -> train_embeddings -> vectorize_corpus -> holdout_split ->
// train_classifier, then scores the held-out rows. Throws SingleClassInput
// when the corpus holds one class, UnlabeledLog, and the module errors.
PipelineResult run_training_pipeline(std::span<const CanonicalLog> logs, const PipelineParams& params);

// Scores the given rows of `data` (all rows when `rows` is empty).
Evaluation evaluate_rows(const GbdtModel& model, const VectorDataset& data, std::span<const std::size_t> rows,
                         double threshold);

}  // namespace memlog
