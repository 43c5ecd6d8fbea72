#include <gtest/gtest.h>

#include <random>
#include <set>
#include <string>

#include "json.hpp"
#include "memlog/error.hpp"
#include "memlog/logmodel.hpp"
#include "support/logs.hpp"

namespace memlog {
namespace {

using nlohmann::json;
using testing::random_log;
using testing::Rng;
using testing::SchemaValidator;

ErrorCode parse_error(std::string_view raw, const ParseOptions& opts = {}) {
  try {
    parse_log(raw, opts);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

TEST(ParseLog, OnlyExeName) {
  const auto parsed = parse_log(R"({"metadata":{"exe_name":"calc.exe"}})");
  CanonicalLog expected;
  expected.metadata.exe_name = "calc.exe";
  EXPECT_EQ(parsed.log, expected);
  EXPECT_TRUE(parsed.report.empty());
}

TEST(ParseLog, WrongTypeIsDropped) {
  const auto parsed = parse_log(R"({"metadata":{"thread_count":"abc","exe_name":"a.exe"}})");
  EXPECT_FALSE(parsed.log.metadata.thread_count.has_value());
  EXPECT_EQ(parsed.log.metadata.exe_name, "a.exe");
  EXPECT_EQ(parsed.report.dropped_fields, std::vector<std::string>{"metadata.thread_count"});
  EXPECT_TRUE(parsed.report.normalized_fields.empty());
}

TEST(ParseLog, NegativeCountIsClamped) {
  const auto parsed = parse_log(R"({"metadata":{"thread_count":-5}})");
  EXPECT_EQ(parsed.log.metadata.thread_count, 0);
  EXPECT_EQ(parsed.report.normalized_fields, std::vector<std::string>{"metadata.thread_count"});
  EXPECT_TRUE(parsed.report.dropped_fields.empty());
}

TEST(ParseLog, EntropyClampedIntoRange) {
  const auto parsed = parse_log(R"({"pe":{"entropy_bits":9.5}})");
  ASSERT_TRUE(parsed.log.pe);
  EXPECT_EQ(parsed.log.pe->entropy_bits, 8.0);
  EXPECT_EQ(parsed.report.normalized_fields, std::vector<std::string>{"pe.entropy_bits"});
}

TEST(ParseLog, BadEnumAndBadHexAreDropped) {
  const auto parsed =
      parse_log(R"({"metadata":{"integrity_level":"root"},"runtime":{"base_address":"zz","eflags":"0x246"}})");
  EXPECT_FALSE(parsed.log.metadata.integrity_level);
  EXPECT_EQ(parsed.log.runtime.base_address, "");
  EXPECT_EQ(parsed.log.runtime.eflags, "0x246");
  const std::set<std::string> dropped(parsed.report.dropped_fields.begin(), parsed.report.dropped_fields.end());
  EXPECT_EQ(dropped, (std::set<std::string>{"metadata.integrity_level", "runtime.base_address"}));
}

TEST(ParseLog, UnknownFieldsIgnored) {
  const auto parsed = parse_log(R"({"extra":1,"metadata":{"os_name":"win","color":"red"}})");
  EXPECT_EQ(parsed.log.metadata.os_name, "win");
  EXPECT_TRUE(parsed.report.empty());
}

TEST(ParseLog, RepairsBomAndTrailingCommas) {
  const auto parsed = parse_log("\xEF\xBB\xBF{\"runtime\":{\"found_ips\":[\"1.2.3.4\",],},}");
  EXPECT_EQ(parsed.log.runtime.found_ips, std::vector<std::string>{"1.2.3.4"});
  EXPECT_EQ(parsed.report.parse_repairs, 4u);
}

TEST(ParseLog, CommaInsideStringIsNotRepaired) {
  const auto parsed = parse_log(R"({"runtime":{"command_line":"a,}"}})");
  EXPECT_EQ(parsed.log.runtime.command_line, "a,}");
  EXPECT_EQ(parsed.report.parse_repairs, 0u);
}

TEST(ParseLog, DeclaredErrors) {
  EXPECT_EQ(parse_error(""), ErrorCode::EmptyDocument);
  EXPECT_EQ(parse_error(" \n\t"), ErrorCode::EmptyDocument);
  EXPECT_EQ(parse_error("{"), ErrorCode::NotJson);
  EXPECT_EQ(parse_error("[1,2]"), ErrorCode::NotJson);
  EXPECT_EQ(parse_error("not json"), ErrorCode::NotJson);
  ParseOptions small;
  small.max_bytes = 8;
  EXPECT_EQ(parse_error(R"({"label":"benign"})", small), ErrorCode::OversizeLog);
}

TEST(ParseLog, ArbitraryBytesYieldOnlyDeclaredErrors) {
  Rng rng(11);
  const std::string seed_doc = serialize_log(random_log(rng));
  for (int i = 0; i < 3000; ++i) {
    std::string raw;
    if (i % 2 == 0) {
      raw.resize(testing::below(rng, 200));
      for (auto& c : raw) c = static_cast<char>(rng());
    } else {
      raw = seed_doc;
      for (int k = 0; k < 4; ++k) raw[testing::below(rng, raw.size())] = static_cast<char>(rng());
    }
    try {
      const auto parsed = parse_log(raw);
      EXPECT_TRUE(SchemaValidator().validate(json::parse(serialize_log(parsed.log))).empty());
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == ErrorCode::NotJson || e.code() == ErrorCode::OversizeLog ||
                  e.code() == ErrorCode::EmptyDocument)
          << e.what();
    }
  }
}

TEST(SerializeLog, EmptyLogSkeleton) {
  const json j = json::parse(serialize_log(CanonicalLog{}));
  EXPECT_TRUE(SchemaValidator().validate(j).empty());
  EXPECT_TRUE(j["label"].is_null());
  EXPECT_TRUE(j["pe"].is_null());
  EXPECT_EQ(j["runtime"]["loaded_modules"], json::array());
  EXPECT_EQ(j["runtime"]["registers"], json::object());
  EXPECT_EQ(j["metadata"]["exe_name"], "");
}

TEST(SerializeLog, KeyOrderIndependentOfConstruction) {
  CanonicalLog a;
  a.runtime.registers["rsp"] = "0x10";
  a.runtime.registers["rax"] = "0x20";
  a.metadata.os_name = "win";
  CanonicalLog b;
  b.metadata.os_name = "win";
  b.runtime.registers["rax"] = "0x20";
  b.runtime.registers["rsp"] = "0x10";
  EXPECT_EQ(serialize_log(a), serialize_log(b));
  const std::string text = serialize_log(a);
  EXPECT_LT(text.find("\"anonymized\""), text.find("\"label\""));
  EXPECT_LT(text.find("\"rax\""), text.find("\"rsp\""));
}

TEST(SerializeLog, RoundTripOnRandomLogs) {
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    const CanonicalLog log = random_log(rng);
    const std::string text = serialize_log(log);
    EXPECT_TRUE(SchemaValidator().validate(json::parse(text)).empty());
    const auto parsed = parse_log(text, ParseOptions{1 << 24});
    ASSERT_EQ(parsed.log, log) << text;
    EXPECT_TRUE(parsed.report.empty());
    EXPECT_EQ(serialize_log(parsed.log), text);
  }
}

TEST(SerializeLog, InvalidUtf8IsRejected) {
  CanonicalLog log;
  log.metadata.exe_name = "\xff\xfe";
  try {
    serialize_log(log);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(Cleaning, Idempotent) {
  const std::string dirty = R"({"label":"malicious","metadata":{"thread_count":-2,"process_id":"x",
      "integrity_level":"high"},"runtime":{"vmem_free":-1,"loaded_modules":[{"base":"0x1000","size":-4},7],
      "illegal_accesses":[{"address":"0x10","bytes":"zz"}],"dep_enabled":"yes"},"pe":{"entropy_bits":-3,"sections":5},})";
  const auto first = parse_log(dirty);
  EXPECT_FALSE(first.report.empty());
  EXPECT_TRUE(SchemaValidator().validate(json::parse(serialize_log(first.log))).empty());
  const auto second = parse_log(serialize_log(first.log));
  EXPECT_TRUE(second.report.empty());
  EXPECT_EQ(second.log, first.log);
}

TEST(Anonymize, SameSaltSamePseudonym) {
  const Bytes salt = {1, 2, 3};
  CanonicalLog a;
  a.anonymized.username = "alice";
  CanonicalLog b = a;
  b.metadata.exe_name = "other.exe";
  const auto pa = anonymize(a, salt);
  const auto pb = anonymize(b, salt);
  EXPECT_EQ(pa.anonymized.username, pb.anonymized.username);
  EXPECT_TRUE(is_pseudonym(pa.anonymized.username));
  EXPECT_EQ(pb.metadata.exe_name, "other.exe");
}

TEST(Anonymize, DifferentSaltsNoCollisions) {
  const Bytes s1 = {1};
  const Bytes s2 = {2};
  std::set<std::string> seen;
  for (int i = 0; i < 1000; ++i) {
    CanonicalLog log;
    log.anonymized.username = "user" + std::to_string(i);
    const auto p1 = anonymize(log, s1).anonymized.username;
    const auto p2 = anonymize(log, s2).anonymized.username;
    EXPECT_NE(p1, p2);
    EXPECT_TRUE(seen.insert(p1).second);
    EXPECT_TRUE(seen.insert(p2).second);
  }
}

TEST(Anonymize, EmptyBlockUnchangedAndIdempotent) {
  const Bytes salt = {9, 9};
  CanonicalLog empty;
  empty.metadata.os_name = "win";
  EXPECT_EQ(anonymize(empty, salt), empty);

  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const CanonicalLog log = random_log(rng);
    const auto once = anonymize(log, salt);
    EXPECT_EQ(anonymize(once, salt), once);
    CanonicalLog rest = once;
    rest.anonymized = log.anonymized;
    EXPECT_EQ(rest, log);
  }
}

TEST(Hex, RoundTripAndAddresses) {
  const Bytes b = {0x00, 0xde, 0xad, 0xff};
  EXPECT_EQ(to_hex(b), "00deadff");
  EXPECT_EQ(from_hex("00DEadff"), b);
  EXPECT_FALSE(from_hex("abc"));
  EXPECT_FALSE(from_hex("zz"));
  EXPECT_TRUE(is_hex_address("0x7FFE1234"));
  EXPECT_TRUE(is_hex_address("ffffffffffffffff"));
  EXPECT_FALSE(is_hex_address("0x"));
  EXPECT_FALSE(is_hex_address("0x1ffffffffffffffff"));
  EXPECT_FALSE(is_hex_address("12g"));
}

}  // namespace
}  // namespace memlog
