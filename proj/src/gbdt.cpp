#include "memlog/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "memlog/binio.hpp"
#include "memlog/error.hpp"

namespace memlog {

namespace {

constexpr std::string_view kMagic = "MLGB";
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxDepthLimit = 32;
constexpr std::uint8_t kLeafTag = 0;
constexpr std::uint8_t kSplitTag = 1;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
}

// Candidate splits of one feature, in ascending threshold order.
std::vector<SplitCandidate> scan_feature(const FeatureMatrix& x, std::span<const std::size_t> rows,
                                         std::span<const double> grad, std::span<const double> hess, double lambda,
                                         std::size_t min_leaf, std::size_t feature, double g_total, double h_total) {
  std::vector<std::size_t> order(rows.begin(), rows.end());
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double xa = x.at(a, feature), xb = x.at(b, feature);
    return xa != xb ? xa < xb : a < b;
  });
  std::vector<SplitCandidate> out;
  const std::size_t n = order.size();
  double g_left = 0.0, h_left = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    g_left += grad[order[i]];
    h_left += hess[order[i]];
    const double here = x.at(order[i], feature);
    const double next = x.at(order[i + 1], feature);
    if (!(next > here)) continue;
    const std::size_t n_left = i + 1;
    if (n_left < min_leaf || n - n_left < min_leaf) continue;
    const double gain = split_gain(g_left, h_left, g_total - g_left, h_total - h_left, lambda);
    if (gain > kMinSplitGain) out.push_back({feature, split_point(here, next), gain});
  }
  return out;
}

std::optional<SplitCandidate> pick(const std::vector<std::vector<SplitCandidate>>& per_feature) {
  double best = 0.0;
  bool any = false;
  for (const auto& cands : per_feature) {
    for (const auto& c : cands) {
      if (!any || c.gain > best) best = c.gain;
      any = true;
    }
  }
  if (!any) return std::nullopt;
  const double floor = best - kGainTieTolerance * std::max(1.0, std::abs(best));
  for (const auto& cands : per_feature) {
    for (const auto& c : cands) {
      if (c.gain >= floor) return c;
    }
  }
  return std::nullopt;
}

void totals(std::span<const std::size_t> rows, std::span<const double> grad, std::span<const double> hess, double& g,
            double& h) {
  g = 0.0;
  h = 0.0;
  for (std::size_t r : rows) {
    g += grad[r];
    h += hess[r];
  }
}

double leaf_weight(double g, double h, double lambda) {
  const double denom = h + lambda;
  return denom > 0.0 ? -g / denom : 0.0;
}

struct TreeBuilder {
  const FeatureMatrix& x;
  std::span<const double> grad;
  std::span<const double> hess;
  const GbdtParams& params;
  std::size_t round;
  const SplitObserver& observer;
  RegressionTree tree;
  std::vector<double>& row_output;  // leaf weight reached by each training row

  std::uint32_t build(std::vector<std::size_t> rows, std::uint32_t depth) {
    double g = 0.0, h = 0.0;
    totals(rows, grad, hess, g, h);
    std::optional<SplitCandidate> split;
    if (depth < params.max_depth && rows.size() >= 2 * params.min_leaf) {
      split = find_best_split(x, rows, grad, hess, params.lambda, params.min_leaf);
    }
    if (observer) observer(NodeVisit{round, depth, rows, grad, hess, split});

    const auto index = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (!split) {
      const double w = leaf_weight(g, h, params.lambda);
      tree.nodes[index].value = w;
      for (std::size_t r : rows) row_output[r] = w;
      return index;
    }
    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) (x.at(r, split->feature) < split->threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    tree.nodes[index].feature = static_cast<std::int32_t>(split->feature);
    tree.nodes[index].threshold = split->threshold;
    const std::uint32_t l = build(std::move(left), depth + 1);
    const std::uint32_t r = build(std::move(right), depth + 1);
    tree.nodes[index].left = l;
    tree.nodes[index].right = r;
    return index;
  }
};

std::uint64_t fnv1a(std::span<const std::uint8_t> data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : data) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void encode_node(binio::Writer& w, const RegressionTree& t, std::uint32_t i) {
  const TreeNode& n = t.nodes[i];
  if (n.is_leaf()) {
    w.u8(kLeafTag);
    w.f64(n.value);
    return;
  }
  w.u8(kSplitTag);
  w.u32(static_cast<std::uint32_t>(n.feature));
  w.f64(n.threshold);
  encode_node(w, t, n.left);
  encode_node(w, t, n.right);
}

std::uint32_t decode_node(binio::Reader& r, RegressionTree& t, std::uint32_t depth, std::uint32_t feature_count) {
  if (depth > t.max_depth) throw Error(ErrorCode::CorruptPayload, "tree deeper than its declared max_depth");
  const auto index = static_cast<std::uint32_t>(t.nodes.size());
  t.nodes.emplace_back();
  const std::uint8_t tag = r.u8();
  if (tag == kLeafTag) {
    t.nodes[index].value = r.f64();
    if (!std::isfinite(t.nodes[index].value)) throw Error(ErrorCode::CorruptPayload, "non-finite leaf value");
    return index;
  }
  if (tag != kSplitTag) throw Error(ErrorCode::CorruptPayload, "unknown node tag");
  const std::uint32_t feature = r.u32();
  if (feature >= feature_count) throw Error(ErrorCode::CorruptPayload, "split feature out of range");
  t.nodes[index].feature = static_cast<std::int32_t>(feature);
  t.nodes[index].threshold = r.f64();
  const std::uint32_t left = decode_node(r, t, depth + 1, feature_count);
  const std::uint32_t right = decode_node(r, t, depth + 1, feature_count);
  t.nodes[index].left = left;
  t.nodes[index].right = right;
  return index;
}

void check_input(const GbdtModel& model, std::span<const double> x) {
  if (x.size() != model.feature_count) {
    throw Error(ErrorCode::LengthMismatch,
                "expected " + std::to_string(model.feature_count) + " features, got " + std::to_string(x.size()));
  }
  if (!all_finite(x)) throw Error(ErrorCode::NonFiniteFeature, "feature vector contains NaN or infinity");
}

}  // namespace

double RegressionTree::evaluate(std::span<const double> x) const {
  std::uint32_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    i = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
  }
  return nodes[i].value;
}

std::size_t RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[i].is_leaf()) {
      stack.emplace_back(nodes[i].left, d + 1);
      stack.emplace_back(nodes[i].right, d + 1);
    }
  }
  return deepest;
}

double split_gain(double g_left, double h_left, double g_right, double h_right, double lambda) {
  const double dl = h_left + lambda, dr = h_right + lambda, d = h_left + h_right + lambda;
  if (dl <= 0.0 || dr <= 0.0 || d <= 0.0) return 0.0;
  const double g = g_left + g_right;
  return 0.5 * (g_left * g_left / dl + g_right * g_right / dr - g * g / d);
}

std::optional<SplitCandidate> find_best_split(const FeatureMatrix& x, std::span<const std::size_t> rows,
                                              std::span<const double> grad, std::span<const double> hess,
                                              double lambda, std::size_t min_leaf) {
  double g = 0.0, h = 0.0;
  totals(rows, grad, hess, g, h);
  std::vector<std::vector<SplitCandidate>> per_feature(x.cols);
  const auto cols = static_cast<std::ptrdiff_t>(x.cols);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t f = 0; f < cols; ++f) {
    per_feature[static_cast<std::size_t>(f)] =
        scan_feature(x, rows, grad, hess, lambda, min_leaf, static_cast<std::size_t>(f), g, h);
  }
  return pick(per_feature);
}

std::optional<SplitCandidate> find_best_split_serial(const FeatureMatrix& x, std::span<const std::size_t> rows,
                                                     std::span<const double> grad, std::span<const double> hess,
                                                     double lambda, std::size_t min_leaf) {
  double g = 0.0, h = 0.0;
  totals(rows, grad, hess, g, h);
  std::vector<std::vector<SplitCandidate>> per_feature(x.cols);
  for (std::size_t f = 0; f < x.cols; ++f) {
    per_feature[f] = scan_feature(x, rows, grad, hess, lambda, min_leaf, f, g, h);
  }
  return pick(per_feature);
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_loss(std::span<const double> logits, std::span<const Label> y) {
  double loss = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double f = logits[i];
    // softplus(f) - y*f
    const double softplus = f > 0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f));
    loss += softplus - (y[i] == Label::Malicious ? f : 0.0);
  }
  return loss;
}

GbdtModel train_classifier(const FeatureMatrix& x, std::span<const Label> y, const GbdtParams& params,
                           TrainingTrace* trace, const SplitObserver& observer) {
  const std::size_t n = x.rows;
  if (y.size() != n) throw Error(ErrorCode::LengthMismatch, "label count differs from row count");
  if (n < 2) throw Error(ErrorCode::TooFewRows, "need at least 2 rows, got " + std::to_string(n));
  if (!(params.shrinkage > 0.0) || !(params.lambda >= 0.0) || params.min_leaf < 1 ||
      params.max_depth > kMaxDepthLimit) {
    throw Error(ErrorCode::InvalidArgument, "invalid boosting parameters");
  }
  if (!all_finite(x.data)) throw Error(ErrorCode::NonFiniteFeature, "training matrix contains NaN or infinity");
  const auto positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), Label::Malicious));
  if (positives == 0 || positives == n) throw Error(ErrorCode::SingleClassInput, "training labels hold one class");

  GbdtModel model;
  model.shrinkage = params.shrinkage;
  model.lambda = params.lambda;
  model.max_depth = params.max_depth;
  model.feature_count = static_cast<std::uint32_t>(x.cols);
  const double prior = static_cast<double>(positives) / static_cast<double>(n);
  model.base_score = std::log(prior / (1.0 - prior));

  std::vector<double> logits(n, model.base_score);
  std::vector<double> grad(n), hess(n), row_output(n);
  std::vector<std::size_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
  if (trace) trace->round_loss.assign(1, log_loss(logits, y));

  for (std::size_t round = 0; round < params.trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(logits[i]);
      grad[i] = p - (y[i] == Label::Malicious ? 1.0 : 0.0);
      hess[i] = p * (1.0 - p);
    }
    TreeBuilder builder{x, grad, hess, params, round, observer, {}, row_output};
    builder.tree.max_depth = params.max_depth;
    builder.build(all_rows, 0);
    for (std::size_t i = 0; i < n; ++i) logits[i] += params.shrinkage * row_output[i];
    model.trees.push_back(std::move(builder.tree));
    if (trace) trace->round_loss.push_back(log_loss(logits, y));
  }

  const auto bytes = encode_model(model);
  char buf[32];
  std::snprintf(buf, sizeof buf, "mlgb-%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
  model.version = buf;
  return model;
}

double raw_score(const GbdtModel& model, std::span<const double> x) {
  double sum = 0.0;
  for (const auto& t : model.trees) sum += t.evaluate(x);
  return model.base_score + model.shrinkage * sum;
}

double predict(const GbdtModel& model, std::span<const double> x) {
  check_input(model, x);
  return sigmoid(raw_score(model, x));
}

std::vector<double> predict_batch(const GbdtModel& model, const FeatureMatrix& x) {
  for (std::size_t i = 0; i < x.rows; ++i) check_input(model, x.row(i));
  std::vector<double> out(x.rows);
  const auto n = static_cast<std::ptrdiff_t>(x.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = sigmoid(raw_score(model, x.row(static_cast<std::size_t>(i))));
  }
  return out;
}

std::vector<double> predict_batch_serial(const GbdtModel& model, const FeatureMatrix& x) {
  std::vector<double> out;
  out.reserve(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out.push_back(predict(model, x.row(i)));
  return out;
}

Label classify(double score, double threshold) { return score >= threshold ? Label::Malicious : Label::Benign; }

std::vector<std::uint8_t> encode_model(const GbdtModel& model) {
  binio::Writer w;
  w.magic(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(model.trees.size()));
  w.u32(model.max_depth);
  w.u32(model.feature_count);
  w.f64(model.shrinkage);
  w.f64(model.lambda);
  w.f64(model.base_score);
  w.str(model.version);
  for (const auto& t : model.trees) {
    w.u32(t.max_depth);
    encode_node(w, t, 0);
  }
  return w.take();
}

GbdtModel decode_model(std::span<const std::uint8_t> data) {
  binio::Reader r(data);
  binio::expect_header(r, kMagic, kVersion);
  GbdtModel model;
  const std::uint32_t tree_count = r.u32();
  model.max_depth = r.u32();
  model.feature_count = r.u32();
  model.shrinkage = r.f64();
  model.lambda = r.f64();
  model.base_score = r.f64();
  model.version = r.str(256);
  if (model.max_depth > kMaxDepthLimit || !std::isfinite(model.shrinkage) || !std::isfinite(model.lambda) ||
      !std::isfinite(model.base_score)) {
    throw Error(ErrorCode::CorruptPayload, "implausible model header");
  }
  // A tree needs at least a depth word, a tag and a leaf value.
  if (static_cast<std::uint64_t>(tree_count) * 13 > r.remaining()) {
    throw Error(ErrorCode::CorruptPayload, "tree count exceeds payload");
  }
  model.trees.reserve(tree_count);
  for (std::uint32_t i = 0; i < tree_count; ++i) {
    RegressionTree t;
    t.max_depth = r.u32();
    if (t.max_depth > kMaxDepthLimit) throw Error(ErrorCode::CorruptPayload, "tree depth out of range");
    decode_node(r, t, 0, model.feature_count);
    model.trees.push_back(std::move(t));
  }
  if (!r.at_end()) throw Error(ErrorCode::CorruptPayload, "trailing bytes after last tree");
  return model;
}

void save_model(const GbdtModel& model, const std::filesystem::path& path) {
  binio::write_file(path, encode_model(model));
}

GbdtModel load_model(const std::filesystem::path& path) { return decode_model(binio::read_file(path)); }

}  // namespace memlog
