#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace memlog {

enum class Arch { X86, X64 };
enum class PeType { PE32, PE32Plus };

struct PeSection {
  std::string name;  // at most 8 bytes, NUL padding stripped
  std::optional<std::int64_t> virtual_size;
  std::optional<std::int64_t> raw_size;
  std::optional<std::int64_t> characteristics;

  bool operator==(const PeSection&) const = default;
};

// PE-derived features. Every scalar is optional because a PeBlock may also come
// from a cleaned JSON log where individual fields were dropped; parse_pe fills
// everything it can read from the image (created/modified come from the caller).
struct PeBlock {
  std::optional<PeType> pe_type;
  std::optional<std::int64_t> section_count;
  std::vector<PeSection> sections;
  std::optional<std::int64_t> import_count;
  std::optional<std::int64_t> export_count;
  std::vector<std::string> import_names;
  std::vector<std::string> export_names;
  std::string export_module_name;
  std::optional<std::int64_t> characteristics;
  std::optional<std::int64_t> compile_timestamp;  // epoch seconds
  std::optional<bool> is_signed;
  std::optional<Arch> arch;
  std::optional<std::int64_t> entry_point_rva;
  std::optional<double> entropy_bits;
  std::optional<std::int64_t> file_size;
  std::string pdb_path;
  std::optional<std::int64_t> created;   // epoch ms
  std::optional<std::int64_t> modified;  // epoch ms

  bool operator==(const PeBlock&) const = default;
};

struct PeParseOptions {
  std::size_t max_import_names = 4096;
  std::size_t max_export_names = 4096;
};

struct PeParseResult {
  PeBlock block;
  // Non-fatal problems, e.g. an import directory that could not be walked.
  std::vector<std::string> warnings;
};

// Header-level PE parse. Throws Error with BadDosMagic, BadPeSignature,
// TruncatedHeader or MalformedSectionTable. Import/export directory problems
// degrade to zero counts plus a warning.
PeParseResult parse_pe(std::span<const std::uint8_t> image, const PeParseOptions& options = {});

// Bits per byte, in [0, 8]. Throws Error(EmptyInput) on empty data.
double shannon_entropy(std::span<const std::uint8_t> data);

}  // namespace memlog
