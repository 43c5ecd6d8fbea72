#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memlog/pe.hpp"

namespace memlog {

using Bytes = std::vector<std::uint8_t>;
using OptInt = std::optional<std::int64_t>;

enum class Label : std::uint8_t { Benign = 0, Malicious = 1 };
enum class IntegrityLevel { Untrusted, Low, Medium, High, System };
enum class PrivilegeLevel { Guest, Standard, Administrator };

std::string_view to_string(Label v);
std::string_view to_string(IntegrityLevel v);
std::string_view to_string(PrivilegeLevel v);
std::string_view to_string(Arch v);
std::string_view to_string(PeType v);

// Fields holding personal data; replaced by pseudonyms before use.
struct AnonymizedBlock {
  std::string username;
  std::string domain_name;
  std::string machine_name;
  std::string ip_address;
  std::string serial_number;

  bool operator==(const AnonymizedBlock&) const = default;
};

struct MetadataBlock {
  OptInt timestamp;  // epoch ms, UTC
  std::string os_name;
  std::string os_build;
  std::string exe_path;
  std::string exe_name;
  std::string exe_hash;
  OptInt file_created;
  OptInt file_modified;
  std::string referral_url;
  OptInt user_login_time;
  OptInt thread_count;
  std::optional<IntegrityLevel> integrity_level;
  std::optional<Arch> exe_arch;
  OptInt work_cycles;
  OptInt kernel_time_ms;
  OptInt process_id;
  OptInt thread_id;
  std::optional<PrivilegeLevel> privilege_level;
  std::string timezone;

  bool operator==(const MetadataBlock&) const = default;
};

struct ResourceEntry {
  std::string path;
  OptInt size;
  std::string hash;
  OptInt created;
  OptInt modified;

  bool operator==(const ResourceEntry&) const = default;
};

struct ModuleEntry {
  std::string base;  // hex address
  std::string end;   // hex address
  OptInt size;
  std::string link_meta;
  std::string path;

  bool operator==(const ModuleEntry&) const = default;
};

struct IllegalAccess {
  std::string address;  // hex address
  Bytes bytes;

  bool operator==(const IllegalAccess&) const = default;
};

struct Injector {
  OptInt pid;
  OptInt ppid;
  std::string hash;
  std::string path;

  bool operator==(const Injector&) const = default;
};

struct EmbeddedFile {
  std::string magic_type;
  OptInt offset;

  bool operator==(const EmbeddedFile&) const = default;
};

struct RegistryAttempt {
  std::string key;
  std::string result;

  bool operator==(const RegistryAttempt&) const = default;
};

struct ProcessDescriptor {
  OptInt pid;
  std::string path;
  std::string hash;
  OptInt created;
  OptInt modified;
  std::string command_line;
  std::optional<IntegrityLevel> integrity_level;
  std::vector<ResourceEntry> loaded_resources;
  std::vector<ModuleEntry> loaded_modules;
  std::vector<ResourceEntry> opened_resources;

  bool operator==(const ProcessDescriptor&) const = default;
};

struct RuntimeBlock {
  std::string base_address;
  std::string command_line;
  std::map<std::string, std::string> registers;  // name -> hex value
  std::map<std::string, Bytes> register_snippets;
  std::string eflags;
  std::string signature;
  std::vector<ResourceEntry> loaded_resources;
  OptInt vmem_free;  // bits
  OptInt vmem_used;  // bits
  std::vector<std::string> hklm_run_entries;
  std::optional<bool> dep_enabled;
  std::vector<IllegalAccess> illegal_accesses;
  std::string import_table_hash;
  std::optional<Injector> injector;
  std::optional<bool> auto_elevate;
  std::vector<ModuleEntry> loaded_modules;
  std::vector<ResourceEntry> opened_resources;
  std::optional<ProcessDescriptor> parent_process;
  std::vector<std::string> process_blocks;
  Bytes stack_snapshot;
  std::vector<std::string> stack_trace;
  std::vector<EmbeddedFile> embedded_files;
  std::vector<std::string> found_urls;
  std::vector<std::string> found_ips;
  std::vector<std::string> scheduled_tasks;
  std::vector<RegistryAttempt> registry_attempts;

  bool operator==(const RuntimeBlock&) const = default;
};

// One runtime log after validation and cleaning. Empty strings, nullopt and
// empty containers all mean "not present in the source document".
struct CanonicalLog {
  std::optional<Label> label;
  AnonymizedBlock anonymized;
  MetadataBlock metadata;
  RuntimeBlock runtime;
  std::optional<PeBlock> pe;

  bool operator==(const CanonicalLog&) const = default;
};

struct CleaningReport {
  std::vector<std::string> dropped_fields;
  std::vector<std::string> normalized_fields;
  std::size_t parse_repairs = 0;

  bool empty() const { return dropped_fields.empty() && normalized_fields.empty() && parse_repairs == 0; }
  bool operator==(const CleaningReport&) const = default;
};

struct ParsedLog {
  CanonicalLog log;
  CleaningReport report;
};

struct ParseOptions {
  std::size_t max_bytes = 500 * 1024;
};

// Throws Error with NotJson, OversizeLog or EmptyDocument; never anything else.
ParsedLog parse_log(std::string_view raw, const ParseOptions& options = {});

// Canonical JSON: sorted keys, every field present (null / "" / [] when empty).
std::string serialize_log(const CanonicalLog& log);

// Replaces the anonymized block with keyed-hash pseudonyms. Values that are
// already pseudonyms are kept, so repeated application is a no-op.
CanonicalLog anonymize(const CanonicalLog& log, std::span<const std::uint8_t> salt);

bool is_pseudonym(std::string_view value);

// Lowercase hex rendering of bytes, and the inverse (nullopt on bad input).
std::string to_hex(std::span<const std::uint8_t> bytes);
std::optional<Bytes> from_hex(std::string_view hex);

// "0x"-prefixed or bare hex number of at most 16 digits.
bool is_hex_address(std::string_view s);

}  // namespace memlog
