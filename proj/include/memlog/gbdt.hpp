#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memlog/logmodel.hpp"
#include "memlog/matrix.hpp"

namespace memlog {

struct TreeNode {
  std::int32_t feature = -1;  // < 0 marks a leaf
  double threshold = 0.0;     // rows with x[feature] < threshold go left
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  double value = 0.0;  // leaf weight, before shrinkage

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

// Nodes are stored in preorder; nodes[0] is the root.
struct RegressionTree {
  std::vector<TreeNode> nodes;
  std::uint32_t max_depth = 0;

  double evaluate(std::span<const double> x) const;
  // Number of edges on the longest root-to-leaf path.
  std::size_t depth() const;
  bool operator==(const RegressionTree&) const = default;
};

struct GbdtParams {
  std::size_t trees = 100;
  std::uint32_t max_depth = 6;
  double shrinkage = 0.1;
  double lambda = 1.0;
  std::size_t min_leaf = 5;
};

struct GbdtModel {
  std::vector<RegressionTree> trees;
  double shrinkage = 0.1;
  double base_score = 0.0;  // log-odds
  double lambda = 1.0;
  std::uint32_t max_depth = 0;
  std::uint32_t feature_count = 0;
  std::string version;

  bool operator==(const GbdtModel&) const = default;
};

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;

  bool operator==(const SplitCandidate&) const = default;
};

// Gains within this relative distance of the best are treated as ties, which
// then go to the lowest feature index and lowest threshold.
inline constexpr double kGainTieTolerance = 1e-9;

// Splits must gain more than this. Mathematically zero gains (pure nodes,
// mirrored halves) come out as rounding noise around 1e-15 and are not splits.
inline constexpr double kMinSplitGain = 1e-10;

// Threshold between two adjacent distinct values lo < hi: the midpoint, or hi
// when the midpoint rounds down onto lo. Rows with x < threshold go left.
inline double split_point(double lo, double hi) {
  const double mid = lo / 2 + hi / 2;
  return mid > lo ? mid : hi;
}

double split_gain(double g_left, double h_left, double g_right, double h_right, double lambda);

// Exact greedy search over every feature and every distinct value boundary of
// the given rows. Returns nullopt when no split has positive gain with both
// children holding at least min_leaf rows. The default parallelises over
// features (OpenMP) with a deterministic serial reduction.
std::optional<SplitCandidate> find_best_split(const FeatureMatrix& x, std::span<const std::size_t> rows,
                                              std::span<const double> grad, std::span<const double> hess,
                                              double lambda, std::size_t min_leaf);
std::optional<SplitCandidate> find_best_split_serial(const FeatureMatrix& x, std::span<const std::size_t> rows,
                                                     std::span<const double> grad, std::span<const double> hess,
                                                     double lambda, std::size_t min_leaf);

// What the trainer saw at one node: enough to re-derive the split independently.
struct NodeVisit {
  std::size_t round;
  std::size_t depth;
  std::span<const std::size_t> rows;
  std::span<const double> grad;  // indexed by row, full length n
  std::span<const double> hess;
  std::optional<SplitCandidate> chosen;
};

struct TrainingTrace {
  // round_loss[0] is the log-loss of the base score alone; entry k follows round k.
  std::vector<double> round_loss;
};

using SplitObserver = std::function<void(const NodeVisit&)>;

// Second-order boosting on logistic loss. Throws TooFewRows, SingleClassInput,
// NonFiniteFeature, LengthMismatch, InvalidArgument.
GbdtModel train_classifier(const FeatureMatrix& x, std::span<const Label> y, const GbdtParams& params,
                           TrainingTrace* trace = nullptr, const SplitObserver& observer = {});

// Sum of base score and shrunken tree outputs (log-odds).
double raw_score(const GbdtModel& model, std::span<const double> x);
// σ(raw_score). Throws NonFiniteFeature / LengthMismatch.
double predict(const GbdtModel& model, std::span<const double> x);
std::vector<double> predict_batch(const GbdtModel& model, const FeatureMatrix& x);
std::vector<double> predict_batch_serial(const GbdtModel& model, const FeatureMatrix& x);

// Malicious iff score >= threshold.
Label classify(double score, double threshold);

double sigmoid(double x);
// Σ −[y log p + (1−y) log(1−p)] with p = σ(logit), computed in logit space.
double log_loss(std::span<const double> logits, std::span<const Label> y);

std::vector<std::uint8_t> encode_model(const GbdtModel& model);
GbdtModel decode_model(std::span<const std::uint8_t> data);
void save_model(const GbdtModel& model, const std::filesystem::path& path);
GbdtModel load_model(const std::filesystem::path& path);

}  // namespace memlog
