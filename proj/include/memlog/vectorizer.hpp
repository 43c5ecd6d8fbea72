#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "memlog/embedding.hpp"
#include "memlog/logmodel.hpp"
#include "memlog/matrix.hpp"
#include "memlog/tokenizer.hpp"

namespace memlog {

inline constexpr std::size_t kLogVectorDim = kGroupCount * kEmbeddingDim;  // 192

// Per-group mean of token embeddings, concatenated in GroupId order.
struct LogVector {
  std::array<double, kLogVectorDim> values{};
  // Fraction of each group's tokens found in the vocabulary (diagnostic only).
  std::array<double, kGroupCount> coverage{};

  std::span<const double> segment(GroupId g) const {
    return std::span<const double>(values).subspan(static_cast<std::size_t>(g) * kEmbeddingDim, kEmbeddingDim);
  }
  bool operator==(const LogVector&) const = default;
};

struct VectorDataset {
  FeatureMatrix features;  // n x 192
  std::vector<Label> labels;

  bool operator==(const VectorDataset&) const = default;
};

LogVector vectorize_log(const GroupedTokens& tokens, const EmbeddingModel& model);

// Row i = vectorize_log(tokenize(logs[i])). Throws UnlabeledLog if any log
// lacks a label. The default runs logs in parallel (OpenMP); the serial
// variant is the reference it is tested against.
VectorDataset vectorize_corpus(std::span<const CanonicalLog> logs, const EmbeddingModel& model);
VectorDataset vectorize_corpus_serial(std::span<const CanonicalLog> logs, const EmbeddingModel& model);

// CSV interchange: header "label,v0,...,v191", label 0 = benign, 1 = malicious.
void write_vector_csv(const VectorDataset& data, std::ostream& out);
VectorDataset read_vector_csv(std::istream& in);

}  // namespace memlog
