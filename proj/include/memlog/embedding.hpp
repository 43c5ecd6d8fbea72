#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "memlog/tokenizer.hpp"

namespace memlog {

inline constexpr std::size_t kEmbeddingDim = 32;

struct Vocabulary {
  std::vector<std::string> tokens;    // id -> token
  std::vector<std::uint64_t> counts;  // id -> corpus frequency
  std::uint64_t min_count = 1;

  std::size_t size() const { return tokens.size(); }
  std::optional<std::uint32_t> find(std::string_view token) const;

  // Rebuilds the token -> id index from `tokens`.
  void reindex();

  // Identity is the (token, count) table; min_count is build provenance.
  bool operator==(const Vocabulary& other) const { return tokens == other.tokens && counts == other.counts; }

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct SkipGramParams {
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double initial_lr = 0.025;
  std::uint64_t seed = 1;
};

struct EmbeddingModel {
  Vocabulary vocab;
  std::size_t dim = kEmbeddingDim;
  std::vector<float> input;   // |V| x dim, row-major: the token embeddings
  std::vector<float> output;  // |V| x dim, row-major: context weights
  SkipGramParams hyperparams;

  std::span<const float> input_row(std::size_t id) const { return {input.data() + id * dim, dim}; }
  std::span<const float> output_row(std::size_t id) const { return {output.data() + id * dim, dim}; }
  std::span<const float> vector(std::string_view token) const;  // throws UnknownToken

  // Bit-exact comparison of the persisted state. Hyperparameters are training
  // provenance and are not stored in the file format.
  bool operator==(const EmbeddingModel& other) const;
};

// Tokens with frequency >= min_count; ids by descending frequency, ties by token.
// Throws EmptyCorpus when no token survives; InvalidArgument when min_count == 0.
Vocabulary build_vocab(std::span<const GroupedTokens> corpus, std::uint64_t min_count);

// Skip-gram with negative sampling. Context windows stay inside one group of
// one log. Deterministic for a given seed. Throws EmptyCorpus / VocabMismatch.
EmbeddingModel train_embeddings(std::span<const GroupedTokens> corpus, const Vocabulary& vocab,
                                const SkipGramParams& params);

// Throws ZeroVector when either input has zero norm.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

struct Neighbor {
  std::string token;
  double similarity;

  bool operator==(const Neighbor&) const = default;
};

// Top-k tokens by cosine similarity of input vectors, excluding `token`
// itself; ties broken by token. Throws UnknownToken, InvalidArgument (k).
std::vector<Neighbor> most_similar(const EmbeddingModel& model, std::string_view token, std::size_t k);

std::vector<std::uint8_t> encode_embeddings(const EmbeddingModel& model);
EmbeddingModel decode_embeddings(std::span<const std::uint8_t> data);
void save_embeddings(const EmbeddingModel& model, const std::filesystem::path& path);
EmbeddingModel load_embeddings(const std::filesystem::path& path);

namespace sgns {

template <typename T>
T sigmoid(T x) {
  if (x >= 0) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
T log_sigmoid(T x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

template <typename T>
T dot(const T* a, const T* b, std::size_t dim) {
  T s = 0;
  for (std::size_t i = 0; i < dim; ++i) s += a[i] * b[i];
  return s;
}

// log σ(u_o·v_c) + Σ_k log σ(−u_k·v_c) for one (center, context, negatives) pair.
template <typename T>
T pair_objective(const T* center, const T* context, std::span<const T* const> negatives, std::size_t dim) {
  T obj = log_sigmoid(dot(context, center, dim));
  for (const T* neg : negatives) obj += log_sigmoid(-dot(neg, center, dim));
  return obj;
}

// Gradient of pair_objective. Each negative slot gets its own gradient row
// (grad_negatives is negatives.size() x dim); repeated rows simply add up.
template <typename T>
void pair_gradient(const T* center, const T* context, std::span<const T* const> negatives, std::size_t dim,
                   T* grad_center, T* grad_context, T* grad_negatives) {
  const T g_pos = T(1) - sigmoid(dot(context, center, dim));
  for (std::size_t i = 0; i < dim; ++i) {
    grad_center[i] = g_pos * context[i];
    grad_context[i] = g_pos * center[i];
  }
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    const T g_neg = -sigmoid(dot(negatives[k], center, dim));
    T* gk = grad_negatives + k * dim;
    for (std::size_t i = 0; i < dim; ++i) {
      grad_center[i] += g_neg * negatives[k][i];
      gk[i] = g_neg * center[i];
    }
  }
}

// One gradient-ascent step on the pair objective: every participating row
// moves by lr times its gradient, all gradients taken at the pre-step point.
void step(EmbeddingModel& model, std::uint32_t center, std::uint32_t context, std::span<const std::uint32_t> negatives,
          float lr);

double objective(const EmbeddingModel& model, std::uint32_t center, std::uint32_t context,
                 std::span<const std::uint32_t> negatives);

}  // namespace sgns

}  // namespace memlog
