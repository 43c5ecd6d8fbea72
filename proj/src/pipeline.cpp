#include "memlog/pipeline.hpp"

#include <algorithm>
#include <numeric>

#include "memlog/error.hpp"
#include "memlog/tokenizer.hpp"

namespace memlog {

std::size_t default_test_size(std::span<const Label> labels) {
  const auto mal = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::Malicious));
  const std::size_t ben = labels.size() - mal;
  return 2 * std::max<std::size_t>(1, std::min(mal, ben) / 5);
}

Evaluation evaluate_rows(const GbdtModel& model, const VectorDataset& data, std::span<const std::size_t> rows,
                         double threshold) {
  check_threshold(threshold);
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(data.features.rows);
    std::iota(all.begin(), all.end(), std::size_t{0});
    rows = all;
  }
  FeatureMatrix x(rows.size(), data.features.cols);
  Evaluation ev;
  ev.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = data.features.row(rows[i]);
    std::copy(src.begin(), src.end(), x.row(i).begin());
    ev.labels.push_back(data.labels[rows[i]]);
  }
  ev.scores = predict_batch(model, x);
  std::vector<Label> predicted;
  predicted.reserve(ev.scores.size());
  for (double s : ev.scores) predicted.push_back(classify(s, threshold));
  ev.confusion = confusion(ev.labels, predicted);
  ev.metrics = compute_metrics(ev.confusion);
  const bool both = std::count(ev.labels.begin(), ev.labels.end(), Label::Malicious) > 0 &&
                    std::count(ev.labels.begin(), ev.labels.end(), Label::Benign) > 0;
  if (both) ev.metrics.auc = roc_auc(ev.labels, ev.scores);
  return ev;
}

PipelineResult run_training_pipeline(std::span<const CanonicalLog> logs, const PipelineParams& params) {
  check_threshold(params.threshold);
  std::vector<Label> labels;
  labels.reserve(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) {
    if (!logs[i].label) throw Error(ErrorCode::UnlabeledLog, "log " + std::to_string(i) + " has no label");
    labels.push_back(*logs[i].label);
  }
  const auto mal = std::count(labels.begin(), labels.end(), Label::Malicious);
  if (mal == 0 || static_cast<std::size_t>(mal) == labels.size()) {
    throw Error(ErrorCode::SingleClassInput, "corpus holds only one class");
  }

  std::vector<GroupedTokens> tokens;
  tokens.reserve(logs.size());
  for (const auto& log : logs) tokens.push_back(tokenize(log));

  PipelineResult out;
  const Vocabulary vocab = build_vocab(tokens, params.min_count);
  out.embeddings = train_embeddings(tokens, vocab, params.skipgram);
  out.data = vectorize_corpus(logs, out.embeddings);
  const std::size_t test_size = params.test_size ? params.test_size : default_test_size(labels);
  out.split = holdout_split(labels, params.split, test_size);

  FeatureMatrix x(out.split.train.size(), out.data.features.cols);
  std::vector<Label> y;
  y.reserve(out.split.train.size());
  for (std::size_t i = 0; i < out.split.train.size(); ++i) {
    const auto src = out.data.features.row(out.split.train[i]);
    std::copy(src.begin(), src.end(), x.row(i).begin());
    y.push_back(labels[out.split.train[i]]);
  }
  out.model = train_classifier(x, y, params.gbdt);
  out.validation = evaluate_rows(out.model, out.data, out.split.test, params.threshold);
  return out;
}

}  // namespace memlog
