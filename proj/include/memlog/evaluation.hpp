#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memlog/logmodel.hpp"

namespace memlog {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fn = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fn + fp + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

// nullopt marks a metric whose denominator is zero.
struct MetricsReport {
  std::optional<double> auc;
  std::optional<double> acc;
  std::optional<double> ppv;
  std::optional<double> tpr;
  std::optional<double> fpr;
  std::optional<double> fnr;
  std::optional<double> f1;
};

struct SplitSpec {
  double train_malicious_fraction = 0.70;
  std::uint64_t shuffle_seed = 0;
};

struct HoldoutSplit {
  std::vector<std::size_t> train;  // indices into the pool
  std::vector<std::size_t> test;
};

// Test set first: test_size / 2 of each class. The training set then takes as
// many of the remaining rows as possible at the requested malicious fraction.
// Throws InsufficientClassCount, InvalidArgument (odd test size, fraction).
HoldoutSplit holdout_split(std::span<const Label> pool, const SplitSpec& spec, std::size_t test_size);

// Malicious is the positive class. Throws LengthMismatch (also on empty input).
ConfusionMatrix confusion(std::span<const Label> y_true, std::span<const Label> y_pred);

// All metrics except auc.
MetricsReport compute_metrics(const ConfusionMatrix& cm);

// Mann-Whitney statistic with midranks for ties. Throws SingleClassInput,
// LengthMismatch.
double roc_auc(std::span<const Label> y_true, std::span<const double> scores);

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

// One point per distinct score (classify at score >= threshold), plus the
// (0,0) corner at threshold +inf.
std::vector<RocPoint> roc_points(std::span<const Label> y_true, std::span<const double> scores);
void write_roc_csv(std::span<const RocPoint> points, std::ostream& out);

// JSON object with counts and metrics; undefined metrics are null.
std::string metrics_json(const ConfusionMatrix& cm, const MetricsReport& report);

}  // namespace memlog
