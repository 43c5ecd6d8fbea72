#pragma once

#include <random>
#include <string>

#include "memlog/embedding.hpp"
#include "memlog/gbdt.hpp"
#include "memlog/vectorizer.hpp"

namespace memlog::testing {

// Arbitrary but valid embedding model with unique tokens and random weights.
inline EmbeddingModel random_embedding_model(std::mt19937_64& rng, std::size_t max_vocab = 64) {
  EmbeddingModel m;
  const std::size_t n = rng() % (max_vocab + 1);
  for (std::size_t i = 0; i < n; ++i) {
    m.vocab.tokens.push_back("tok" + std::to_string(i) + "_" + std::to_string(rng() % 1000));
    m.vocab.counts.push_back(1 + rng() % 100000);
  }
  m.vocab.reindex();
  std::normal_distribution<float> normal(0.0f, 1.0f);
  m.input.resize(n * m.dim);
  m.output.resize(n * m.dim);
  for (auto& x : m.input) x = normal(rng);
  for (auto& x : m.output) x = normal(rng);
  return m;
}

inline void grow_tree(std::mt19937_64& rng, RegressionTree& t, std::size_t depth, std::uint32_t features) {
  const std::size_t self = t.nodes.size();
  t.nodes.emplace_back();
  std::normal_distribution<double> normal(0.0, 1.0);
  if (depth == t.max_depth || rng() % 3 == 0) {
    t.nodes[self].value = normal(rng);
    return;
  }
  t.nodes[self].feature = static_cast<std::int32_t>(rng() % features);
  t.nodes[self].threshold = normal(rng);
  t.nodes[self].left = static_cast<std::uint32_t>(t.nodes.size());
  grow_tree(rng, t, depth + 1, features);
  t.nodes[self].right = static_cast<std::uint32_t>(t.nodes.size());
  grow_tree(rng, t, depth + 1, features);
}

// Structurally valid model: preorder trees within their declared depth.
inline GbdtModel random_gbdt_model(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  GbdtModel m;
  m.feature_count = static_cast<std::uint32_t>(kLogVectorDim);
  m.max_depth = static_cast<std::uint32_t>(1 + rng() % 6);
  m.shrinkage = 0.01 + (rng() % 1000) / 1000.0;
  m.lambda = (rng() % 100) / 10.0;
  m.base_score = normal(rng);
  m.version = "mlgb-test-" + std::to_string(rng() % 100000);
  const std::size_t trees = rng() % 12;
  for (std::size_t i = 0; i < trees; ++i) {
    RegressionTree t;
    t.max_depth = m.max_depth;
    grow_tree(rng, t, 0, m.feature_count);
    m.trees.push_back(std::move(t));
  }
  return m;
}

}  // namespace memlog::testing
