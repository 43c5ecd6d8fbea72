#include "memlog/vectorizer.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

#include "memlog/error.hpp"

namespace memlog {

LogVector vectorize_log(const GroupedTokens& tokens, const EmbeddingModel& model) {
  LogVector out;
  for (std::size_t g = 0; g < kGroupCount; ++g) {
    const auto& group = tokens.groups[g];
    std::array<double, kEmbeddingDim> sum{};
    std::size_t found = 0;
    for (const auto& t : group) {
      auto id = model.vocab.find(t);
      if (!id) continue;
      const auto row = model.input_row(*id);
      for (std::size_t i = 0; i < kEmbeddingDim; ++i) sum[i] += row[i];
      ++found;
    }
    if (found > 0) {
      for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
        out.values[g * kEmbeddingDim + i] = sum[i] / static_cast<double>(found);
      }
    }
    out.coverage[g] = group.empty() ? 0.0 : static_cast<double>(found) / static_cast<double>(group.size());
  }
  return out;
}

namespace {

VectorDataset prepare(std::span<const CanonicalLog> logs) {
  VectorDataset out;
  out.features = FeatureMatrix(logs.size(), kLogVectorDim);
  out.labels.reserve(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) {
    if (!logs[i].label) throw Error(ErrorCode::UnlabeledLog, "log #" + std::to_string(i) + " has no label");
    out.labels.push_back(*logs[i].label);
  }
  return out;
}

void fill_row(VectorDataset& out, std::size_t i, const CanonicalLog& log, const EmbeddingModel& model) {
  const LogVector v = vectorize_log(tokenize(log), model);
  std::copy(v.values.begin(), v.values.end(), out.features.row(i).begin());
}

}  // namespace

VectorDataset vectorize_corpus(std::span<const CanonicalLog> logs, const EmbeddingModel& model) {
  VectorDataset out = prepare(logs);
  const auto n = static_cast<std::ptrdiff_t>(logs.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    fill_row(out, static_cast<std::size_t>(i), logs[static_cast<std::size_t>(i)], model);
  }
  return out;
}

VectorDataset vectorize_corpus_serial(std::span<const CanonicalLog> logs, const EmbeddingModel& model) {
  VectorDataset out = prepare(logs);
  for (std::size_t i = 0; i < logs.size(); ++i) fill_row(out, i, logs[i], model);
  return out;
}

void write_vector_csv(const VectorDataset& data, std::ostream& out) {
  out << "label";
  for (std::size_t j = 0; j < data.features.cols; ++j) out << ",v" << j;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < data.features.rows; ++i) {
    out << static_cast<int>(data.labels[i]);
    for (double x : data.features.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", x);
      out << ',' << buf;
    }
    out << '\n';
  }
}

VectorDataset read_vector_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("label")) {
    throw Error(ErrorCode::CorruptPayload, "vector CSV is missing its header");
  }
  std::size_t cols = 0;
  for (char c : line) cols += c == ',' ? 1 : 0;
  if (cols == 0) throw Error(ErrorCode::CorruptPayload, "vector CSV has no feature columns");

  VectorDataset out;
  out.features.cols = cols;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    auto bad = [&] { return Error(ErrorCode::CorruptPayload, "malformed vector CSV line " + std::to_string(line_no)); };
    int label = -1;
    auto [lp, lec] = std::from_chars(p, end, label);
    if (lec != std::errc() || (label != 0 && label != 1)) throw bad();
    p = lp;
    for (std::size_t j = 0; j < cols; ++j) {
      if (p >= end || *p != ',') throw bad();
      ++p;
      // strtod needs a terminated buffer; the line itself is one.
      char* next = nullptr;
      const double x = std::strtod(p, &next);
      if (next == p) throw bad();
      out.features.data.push_back(x);
      p = next;
    }
    if (p != end) throw bad();
    out.labels.push_back(label == 1 ? Label::Malicious : Label::Benign);
  }
  out.features.rows = out.labels.size();
  return out;
}

}  // namespace memlog
