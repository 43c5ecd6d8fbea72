#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memlog/logmodel.hpp"

namespace memlog {

enum class GroupId : std::size_t { Stack = 0, Registers, Opcodes, Modules, Resources, ProcessMeta };

inline constexpr std::size_t kGroupCount = 6;

std::string_view to_string(GroupId g);

// Field values of one log, split into the six pooling groups. Every token is
// non-empty, lowercase and free of whitespace.
struct GroupedTokens {
  std::array<std::vector<std::string>, kGroupCount> groups;

  std::vector<std::string>& operator[](GroupId g) { return groups[static_cast<std::size_t>(g)]; }
  const std::vector<std::string>& operator[](GroupId g) const { return groups[static_cast<std::size_t>(g)]; }
  std::size_t total() const;

  bool operator==(const GroupedTokens&) const = default;
};

enum class FieldKind {
  Text,     // lowercased, whitespace -> '_'
  Address,  // hex address bucketed to its 4 KiB page
  Path,     // basename of a Windows or POSIX path
};

std::string canonicalize_value(std::string_view raw, FieldKind kind);

// Splits bytes into 4-byte lowercase hex words; the last word may be shorter.
std::vector<std::string> hex_words(std::span<const std::uint8_t> bytes);

GroupedTokens tokenize(const CanonicalLog& log);

}  // namespace memlog
