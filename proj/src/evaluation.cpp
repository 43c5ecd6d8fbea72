#include "memlog/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "json.hpp"
#include "memlog/error.hpp"

namespace memlog {

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(a) + " labels vs " + std::to_string(b) + " values");
  }
}

}  // namespace

HoldoutSplit holdout_split(std::span<const Label> pool, const SplitSpec& spec, std::size_t test_size) {
  const double f = spec.train_malicious_fraction;
  if (!(f > 0.0 && f < 1.0)) throw Error(ErrorCode::InvalidArgument, "train fraction must be in (0,1)");
  if (test_size % 2 != 0) throw Error(ErrorCode::InvalidArgument, "test size must be even");

  std::vector<std::size_t> mal, ben;
  for (std::size_t i = 0; i < pool.size(); ++i) (pool[i] == Label::Malicious ? mal : ben).push_back(i);
  std::mt19937_64 rng(spec.shuffle_seed);
  std::shuffle(mal.begin(), mal.end(), rng);
  std::shuffle(ben.begin(), ben.end(), rng);

  const std::size_t half = test_size / 2;
  if (mal.size() <= half || ben.size() <= half) {
    throw Error(ErrorCode::InsufficientClassCount, "pool has " + std::to_string(mal.size()) + " malicious and " +
                                                       std::to_string(ben.size()) +
                                                       " benign; need more than " + std::to_string(half) +
                                                       " of each");
  }
  HoldoutSplit split;
  split.test.insert(split.test.end(), mal.begin(), mal.begin() + static_cast<std::ptrdiff_t>(half));
  split.test.insert(split.test.end(), ben.begin(), ben.begin() + static_cast<std::ptrdiff_t>(half));

  const std::size_t mal_left = mal.size() - half;
  const std::size_t ben_left = ben.size() - half;
  std::size_t take_mal = mal_left;
  auto take_ben = static_cast<std::size_t>(std::llround(static_cast<double>(take_mal) * (1.0 - f) / f));
  if (take_ben > ben_left) {
    take_ben = ben_left;
    take_mal = std::min(mal_left, static_cast<std::size_t>(std::llround(static_cast<double>(take_ben) * f / (1.0 - f))));
  }
  if (take_mal == 0 || take_ben == 0) {
    throw Error(ErrorCode::InsufficientClassCount, "training set would miss a class at this fraction");
  }
  split.train.insert(split.train.end(), mal.begin() + static_cast<std::ptrdiff_t>(half),
                     mal.begin() + static_cast<std::ptrdiff_t>(half + take_mal));
  split.train.insert(split.train.end(), ben.begin() + static_cast<std::ptrdiff_t>(half),
                     ben.begin() + static_cast<std::ptrdiff_t>(half + take_ben));
  std::shuffle(split.train.begin(), split.train.end(), rng);
  std::shuffle(split.test.begin(), split.test.end(), rng);
  return split;
}

ConfusionMatrix confusion(std::span<const Label> y_true, std::span<const Label> y_pred) {
  check_lengths(y_true.size(), y_pred.size());
  if (y_true.empty()) throw Error(ErrorCode::LengthMismatch, "empty label lists");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool actual = y_true[i] == Label::Malicious;
    const bool predicted = y_pred[i] == Label::Malicious;
    if (actual && predicted) ++cm.tp;
    else if (actual) ++cm.fn;
    else if (predicted) ++cm.fp;
    else ++cm.tn;
  }
  return cm;
}

MetricsReport compute_metrics(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.acc = ratio(cm.tp + cm.tn, cm.total());
  r.ppv = ratio(cm.tp, cm.tp + cm.fp);
  r.tpr = ratio(cm.tp, cm.tp + cm.fn);
  r.fpr = ratio(cm.fp, cm.fp + cm.tn);
  r.fnr = ratio(cm.fn, cm.tp + cm.fn);
  // 2·ppv·tpr/(ppv+tpr) reduces to 2tp/(2tp+fp+fn), which avoids a rounding step.
  if (r.ppv && r.tpr && (*r.ppv + *r.tpr) > 0.0) r.f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn);
  return r;
}

double roc_auc(std::span<const Label> y_true, std::span<const double> scores) {
  check_lengths(y_true.size(), scores.size());
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Ranks are 1-based; a tie block spanning ranks [i+1, j] gets (i+1+j)/2 each.
  // Sums are kept doubled so they stay integral.
  std::uint64_t pos = 0;
  std::uint64_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    std::uint64_t block_pos = 0;
    for (std::size_t k = i; k < j; ++k) block_pos += y_true[order[k]] == Label::Malicious ? 1 : 0;
    twice_rank_sum += block_pos * static_cast<std::uint64_t>(i + 1 + j);
    pos += block_pos;
    i = j;
  }
  const std::uint64_t neg = n - pos;
  if (pos == 0 || neg == 0) throw Error(ErrorCode::SingleClassInput, "roc_auc needs both classes");
  const std::uint64_t twice_u = twice_rank_sum - pos * (pos + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

std::vector<RocPoint> roc_points(std::span<const Label> y_true, std::span<const double> scores) {
  check_lengths(y_true.size(), scores.size());
  const auto pos = static_cast<std::size_t>(std::count(y_true.begin(), y_true.end(), Label::Malicious));
  const std::size_t neg = y_true.size() - pos;
  if (pos == 0 || neg == 0) throw Error(ErrorCode::SingleClassInput, "roc curve needs both classes");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<RocPoint> out{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (y_true[order[i]] == Label::Malicious ? tp : fp) += 1;
      ++i;
    }
    out.push_back({s, static_cast<double>(fp) / static_cast<double>(neg),
                   static_cast<double>(tp) / static_cast<double>(pos)});
  }
  return out;
}

void write_roc_csv(std::span<const RocPoint> points, std::ostream& out) {
  out << "threshold,fpr,tpr\n";
  char buf[96];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.threshold, p.fpr, p.tpr);
    out << buf;
  }
}

std::string metrics_json(const ConfusionMatrix& cm, const MetricsReport& report) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["confusion"] = {{"tp", cm.tp}, {"fn", cm.fn}, {"fp", cm.fp}, {"tn", cm.tn}};
  j["auc"] = opt(report.auc);
  j["acc"] = opt(report.acc);
  j["ppv"] = opt(report.ppv);
  j["tpr"] = opt(report.tpr);
  j["fpr"] = opt(report.fpr);
  j["fnr"] = opt(report.fnr);
  j["f1"] = opt(report.f1);
  return j.dump(2);
}

}  // namespace memlog
