#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "memlog/error.hpp"
#include "memlog/synthgen.hpp"
#include "memlog/tokenizer.hpp"
#include "support/fixtures.hpp"
#include "support/logs.hpp"

namespace memlog {
namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Synthgen, NoMaliciousMeansAllBenign) {
  const auto logs = generate_corpus(GenSpec{0, 15, 0.0, 3, {}});
  ASSERT_EQ(logs.size(), 15u);
  for (const auto& l : logs) EXPECT_EQ(l.label, Label::Benign);
}

TEST(Synthgen, LabelCountsExact) {
  for (std::size_t mal : {0u, 1u, 7u, 40u}) {
    for (std::size_t ben : {0u, 3u, 25u}) {
      const auto logs = generate_corpus(GenSpec{mal, ben, 0.5, mal * 31 + ben, {}});
      EXPECT_EQ(static_cast<std::size_t>(std::count_if(logs.begin(), logs.end(),
                                                       [](const auto& l) { return l.label == Label::Malicious; })),
                mal);
      EXPECT_EQ(logs.size(), mal + ben);
    }
  }
}

TEST(Synthgen, DeterministicAndIndexAddressable) {
  const GenSpec spec{12, 12, 0.25, 99, {}};
  const auto a = generate_corpus(spec);
  const auto b = generate_corpus(spec);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(serialize_log(a[i]), serialize_log(b[i]));
    EXPECT_EQ(generate_log(spec, i), a[i]);
  }
  GenSpec other = spec;
  other.seed = 100;
  EXPECT_NE(serialize_log(generate_corpus(other)[0]), serialize_log(a[0]));
}

TEST(Synthgen, LogsAreCleanAndSchemaValid) {
  const auto logs = generate_corpus(GenSpec{60, 60, 0.4, 5, {}});
  std::size_t with_pe = 0;
  for (const auto& log : logs) {
    const std::string text = serialize_log(log);
    const auto problems = testing::SchemaValidator().validate(nlohmann::json::parse(text));
    EXPECT_TRUE(problems.empty()) << (problems.empty() ? "" : problems.front());
    const auto parsed = parse_log(text);
    EXPECT_TRUE(parsed.report.empty());
    EXPECT_EQ(parsed.log, log);
    with_pe += log.pe.has_value();
    // Every group carries tokens.
    const auto t = tokenize(log);
    for (const auto& g : t.groups) EXPECT_FALSE(g.empty());
    if (log.pe) {
      EXPECT_EQ(static_cast<std::size_t>(*log.pe->section_count), log.pe->sections.size());
      EXPECT_EQ(log.pe->pe_type == PeType::PE32Plus, log.pe->arch == Arch::X64);
    }
  }
  EXPECT_GT(with_pe, 0u);
  EXPECT_LT(with_pe, logs.size());
}

TEST(Synthgen, ZeroOverlapSeparatesIndicatorVocabularies) {
  const auto logs = generate_corpus(GenSpec{80, 80, 0.0, 11, {}});
  std::set<std::string> mal, ben;
  for (const auto& l : logs) {
    auto& dst = l.label == Label::Malicious ? mal : ben;
    for (const auto& m : l.runtime.loaded_modules) dst.insert(m.path);
    for (const auto& f : l.runtime.stack_trace) dst.insert(f);
  }
  std::vector<std::string> shared;
  std::set_intersection(mal.begin(), mal.end(), ben.begin(), ben.end(), std::back_inserter(shared));
  // Only class-independent background (e.g. the thread start frame) is shared.
  for (const auto& s : shared) {
    EXPECT_EQ(s.find("fam"), std::string::npos) << s;
    EXPECT_EQ(s.find("ben"), std::string::npos) << s;
  }
}

TEST(Synthgen, InvalidSpec) {
  for (const GenSpec& bad : {GenSpec{1, 1, -0.1, 0, {}}, GenSpec{1, 1, 1.5, 0, {}},
                             GenSpec{1, 1, 0.5, 0, {0, 1, 1, 1}}, GenSpec{1, 1, 0.5, 0, {1, 1, 1, 0}}}) {
    try {
      validate(bad);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidSpec);
    }
  }
}

TEST(Synthgen, WriteCorpus) {
  testing::TempDir dir;
  const auto logs = generate_corpus(GenSpec{3, 2, 0.0, 1, {}});
  write_corpus(logs, dir.path());
  EXPECT_EQ(slurp(dir / "log_000000.json"), serialize_log(logs[0]));
  EXPECT_EQ(slurp(dir / "labels.csv"),
            "file,label\nlog_000000.json,malicious\nlog_000001.json,malicious\nlog_000002.json,malicious\n"
            "log_000003.json,benign\nlog_000004.json,benign\n");
}

}  // namespace
}  // namespace memlog
