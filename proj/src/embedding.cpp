#include "memlog/embedding.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <random>

#include "memlog/binio.hpp"
#include "memlog/error.hpp"

namespace memlog {

namespace {

constexpr std::string_view kMagic = "MLEB";
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kMaxTokenBytes = 1 << 16;
constexpr double kUnigramPower = 0.75;
constexpr double kMinLrFraction = 1e-4;
constexpr int kNegativeRetries = 10;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Draws ids with probability proportional to count^0.75.
class UnigramSampler {
 public:
  explicit UnigramSampler(const std::vector<std::uint64_t>& counts) {
    cumulative_.reserve(counts.size());
    double acc = 0.0;
    for (std::uint64_t c : counts) {
      acc += std::pow(static_cast<double>(c), kUnigramPower);
      cumulative_.push_back(acc);
    }
  }

  std::uint32_t draw(std::mt19937_64& rng) const {
    const double target = uniform01(rng) * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    if (it == cumulative_.end()) --it;
    return static_cast<std::uint32_t>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

std::map<std::string_view, std::uint64_t> count_tokens(std::span<const GroupedTokens> corpus) {
  std::map<std::string_view, std::uint64_t> counts;
  for (const auto& doc : corpus) {
    for (const auto& group : doc.groups) {
      for (const auto& t : group) ++counts[t];
    }
  }
  return counts;
}

}  // namespace

std::optional<std::uint32_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::reindex() {
  index_.clear();
  index_.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) index_.emplace(tokens[i], static_cast<std::uint32_t>(i));
}

std::span<const float> EmbeddingModel::vector(std::string_view token) const {
  auto id = vocab.find(token);
  if (!id) throw Error(ErrorCode::UnknownToken, std::string(token));
  return input_row(*id);
}

bool EmbeddingModel::operator==(const EmbeddingModel& other) const {
  auto same_bits = [](const std::vector<float>& a, const std::vector<float>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
  };
  return vocab == other.vocab && dim == other.dim && same_bits(input, other.input) && same_bits(output, other.output);
}

Vocabulary build_vocab(std::span<const GroupedTokens> corpus, std::uint64_t min_count) {
  if (min_count == 0) throw Error(ErrorCode::InvalidArgument, "min_count must be >= 1");
  const auto counts = count_tokens(corpus);
  std::vector<std::pair<std::string_view, std::uint64_t>> kept;
  for (const auto& [token, n] : counts) {
    if (n >= min_count) kept.emplace_back(token, n);
  }
  if (kept.empty()) throw Error(ErrorCode::EmptyCorpus, "no token reaches min_count " + std::to_string(min_count));
  // counts is already token-ordered, so a stable sort keeps the lexicographic tie-break.
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary vocab;
  vocab.min_count = min_count;
  for (const auto& [token, n] : kept) {
    vocab.tokens.emplace_back(token);
    vocab.counts.push_back(n);
  }
  vocab.reindex();
  return vocab;
}

namespace sgns {

void step(EmbeddingModel& model, std::uint32_t center, std::uint32_t context, std::span<const std::uint32_t> negatives,
          float lr) {
  const std::size_t dim = model.dim;
  float* v = model.input.data() + center * dim;
  float* u = model.output.data() + context * dim;
  thread_local std::vector<const float*> negs;
  thread_local std::vector<float> g_center, g_context, g_neg;
  negs.clear();
  for (std::uint32_t n : negatives) negs.push_back(model.output.data() + n * dim);
  g_center.resize(dim);
  g_context.resize(dim);
  g_neg.resize(negatives.size() * dim);
  pair_gradient<float>(v, u, negs, dim, g_center.data(), g_context.data(), g_neg.data());

  for (std::size_t i = 0; i < dim; ++i) {
    v[i] += lr * g_center[i];
    u[i] += lr * g_context[i];
  }
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    float* row = model.output.data() + negatives[k] * dim;
    for (std::size_t i = 0; i < dim; ++i) row[i] += lr * g_neg[k * dim + i];
  }
}

double objective(const EmbeddingModel& model, std::uint32_t center, std::uint32_t context,
                 std::span<const std::uint32_t> negatives) {
  const std::size_t dim = model.dim;
  std::vector<double> v(model.input_row(center).begin(), model.input_row(center).end());
  std::vector<double> u(model.output_row(context).begin(), model.output_row(context).end());
  std::vector<std::vector<double>> rows;
  std::vector<const double*> negs;
  rows.reserve(negatives.size());
  for (std::uint32_t n : negatives) {
    rows.emplace_back(model.output_row(n).begin(), model.output_row(n).end());
    negs.push_back(rows.back().data());
  }
  return pair_objective<double>(v.data(), u.data(), negs, dim);
}

}  // namespace sgns

EmbeddingModel train_embeddings(std::span<const GroupedTokens> corpus, const Vocabulary& vocab,
                                const SkipGramParams& params) {
  if (vocab.size() == 0 || corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "nothing to train on");
  if (params.window == 0 || params.negatives == 0 || params.epochs == 0) {
    throw Error(ErrorCode::InvalidArgument, "window, negatives and epochs must be >= 1");
  }
  {
    const auto counts = count_tokens(corpus);
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      auto it = counts.find(vocab.tokens[i]);
      if (it == counts.end() || it->second != vocab.counts[i]) {
        throw Error(ErrorCode::VocabMismatch, "vocabulary was not built from this corpus: '" + vocab.tokens[i] + "'");
      }
    }
  }

  EmbeddingModel model;
  model.vocab = vocab;
  model.vocab.reindex();
  model.hyperparams = params;
  const std::size_t dim = model.dim;
  std::mt19937_64 rng(params.seed);
  model.input.resize(vocab.size() * dim);
  for (float& x : model.input) x = static_cast<float>((uniform01(rng) - 0.5) / static_cast<double>(dim));
  model.output.assign(vocab.size() * dim, 0.0f);

  // Map every group to in-vocabulary ids once; OOV tokens are removed before windowing.
  std::vector<std::vector<std::uint32_t>> sequences;
  std::uint64_t words = 0;
  for (const auto& doc : corpus) {
    for (const auto& group : doc.groups) {
      std::vector<std::uint32_t> ids;
      for (const auto& t : group) {
        if (auto id = model.vocab.find(t)) ids.push_back(*id);
      }
      words += ids.size();
      if (ids.size() > 1) sequences.push_back(std::move(ids));
    }
  }

  const UnigramSampler sampler(vocab.counts);
  const double total = static_cast<double>(words) * static_cast<double>(params.epochs) + 1.0;
  std::uint64_t processed = 0;
  std::vector<std::uint32_t> negatives;
  negatives.reserve(params.negatives);

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    for (const auto& seq : sequences) {
      for (std::size_t i = 0; i < seq.size(); ++i, ++processed) {
        const double frac = std::max(kMinLrFraction, 1.0 - static_cast<double>(processed) / total);
        const auto lr = static_cast<float>(params.initial_lr * frac);
        const std::size_t lo = i >= params.window ? i - params.window : 0;
        const std::size_t hi = std::min(seq.size() - 1, i + params.window);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          negatives.clear();
          for (std::size_t k = 0; k < params.negatives; ++k) {
            for (int attempt = 0; attempt < kNegativeRetries; ++attempt) {
              const std::uint32_t n = sampler.draw(rng);
              if (n != seq[j]) {
                negatives.push_back(n);
                break;
              }
            }
          }
          sgns::step(model, seq[i], seq[j], negatives, lr);
        }
      }
    }
  }
  return model;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "vector dimensions differ");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<double>(a[i]) * b[i];
    aa += static_cast<double>(a[i]) * a[i];
    bb += static_cast<double>(b[i]) * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine similarity of a zero vector");
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

std::vector<Neighbor> most_similar(const EmbeddingModel& model, std::string_view token, std::size_t k) {
  const auto query = model.vocab.find(token);
  if (!query) throw Error(ErrorCode::UnknownToken, std::string(token));
  if (k < 1 || k >= model.vocab.size()) {
    throw Error(ErrorCode::InvalidArgument, "k must be in [1, |V|-1]");
  }
  const auto q = model.input_row(*query);
  std::vector<Neighbor> all;
  all.reserve(model.vocab.size() - 1);
  for (std::size_t id = 0; id < model.vocab.size(); ++id) {
    if (id == *query) continue;
    double sim = 0.0;
    try {
      sim = cosine_similarity(q, model.input_row(id));
    } catch (const Error&) {
      // A zero vector has no direction; rank it as orthogonal.
    }
    all.push_back({model.vocab.tokens[id], sim});
  }
  auto by_rank = [](const Neighbor& a, const Neighbor& b) {
    return a.similarity != b.similarity ? a.similarity > b.similarity : a.token < b.token;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), by_rank);
  all.resize(k);
  return all;
}

std::vector<std::uint8_t> encode_embeddings(const EmbeddingModel& model) {
  binio::Writer w;
  w.magic(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(model.dim));
  w.u32(static_cast<std::uint32_t>(model.vocab.size()));
  for (std::size_t i = 0; i < model.vocab.size(); ++i) {
    w.str(model.vocab.tokens[i]);
    w.u64(model.vocab.counts[i]);
  }
  for (float x : model.input) w.f32(x);
  for (float x : model.output) w.f32(x);
  return w.take();
}

EmbeddingModel decode_embeddings(std::span<const std::uint8_t> data) {
  binio::Reader r(data);
  binio::expect_header(r, kMagic, kVersion);
  EmbeddingModel model;
  model.dim = r.u32();
  if (model.dim != kEmbeddingDim) {
    throw Error(ErrorCode::CorruptPayload, "embedding dimension " + std::to_string(model.dim));
  }
  const std::uint32_t n = r.u32();
  // Each entry needs at least a length prefix and a frequency.
  if (static_cast<std::uint64_t>(n) * 12 > r.remaining()) {
    throw Error(ErrorCode::CorruptPayload, "vocabulary size exceeds payload");
  }
  model.vocab.tokens.reserve(n);
  model.vocab.counts.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    model.vocab.tokens.push_back(r.str(kMaxTokenBytes));
    model.vocab.counts.push_back(r.u64());
  }
  model.vocab.reindex();
  {
    std::vector<std::string_view> sorted(model.vocab.tokens.begin(), model.vocab.tokens.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw Error(ErrorCode::CorruptPayload, "duplicate vocabulary token");
    }
  }
  model.vocab.min_count =
      n == 0 ? 1 : *std::min_element(model.vocab.counts.begin(), model.vocab.counts.end());

  const std::uint64_t cells = static_cast<std::uint64_t>(n) * model.dim;
  if (r.remaining() != cells * 8) throw Error(ErrorCode::CorruptPayload, "matrix payload has wrong length");
  model.input.resize(cells);
  model.output.resize(cells);
  for (float& x : model.input) x = r.f32();
  for (float& x : model.output) x = r.f32();
  auto finite = [](float x) { return std::isfinite(x); };
  if (!std::all_of(model.input.begin(), model.input.end(), finite) ||
      !std::all_of(model.output.begin(), model.output.end(), finite)) {
    throw Error(ErrorCode::CorruptPayload, "non-finite weight");
  }
  return model;
}

void save_embeddings(const EmbeddingModel& model, const std::filesystem::path& path) {
  binio::write_file(path, encode_embeddings(model));
}

EmbeddingModel load_embeddings(const std::filesystem::path& path) { return decode_embeddings(binio::read_file(path)); }

}  // namespace memlog
