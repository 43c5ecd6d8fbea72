#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "memlog/logmodel.hpp"

namespace memlog::testing {

using Rng = std::mt19937_64;

inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }
inline std::size_t below(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

// Printable text with some multi-byte UTF-8 and JSON-special characters.
inline std::string random_text(Rng& rng, std::size_t max_len = 24) {
  static const std::vector<std::string> kPieces = {"a", "Z", "0", " ", "\\", "\"", "/", ".", "-", "_", "é", "ß", "€", "\t", "x"};
  std::string s;
  for (std::size_t i = 0, n = below(rng, max_len + 1); i < n; ++i) s += kPieces[below(rng, kPieces.size())];
  return s;
}

inline std::string random_hex_address(Rng& rng) {
  if (coin(rng, 0.1)) return "";
  char buf[24];
  const auto v = rng() >> below(rng, 64);
  std::snprintf(buf, sizeof buf, coin(rng) ? "0x%llx" : "%llX", static_cast<unsigned long long>(v));
  return buf;
}

inline OptInt random_int(Rng& rng) {
  if (coin(rng, 0.15)) return std::nullopt;
  switch (below(rng, 3)) {
    case 0: return static_cast<std::int64_t>(below(rng, 100));
    case 1: return static_cast<std::int64_t>(rng() >> 1);
    default: return std::numeric_limits<std::int64_t>::max();
  }
}

inline std::optional<bool> random_bool(Rng& rng) {
  if (coin(rng, 0.2)) return std::nullopt;
  return coin(rng);
}

inline Bytes random_bytes(Rng& rng, std::size_t max_len = 40) {
  Bytes b(below(rng, max_len + 1));
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return b;
}

template <typename E>
std::optional<E> random_enum(Rng& rng, int count) {
  if (coin(rng, 0.2)) return std::nullopt;
  return static_cast<E>(below(rng, static_cast<std::size_t>(count)));
}

inline std::vector<std::string> random_strings(Rng& rng, std::size_t max_n = 4) {
  std::vector<std::string> v(below(rng, max_n + 1));
  for (auto& s : v) s = random_text(rng);
  return v;
}

inline ResourceEntry random_resource(Rng& rng) {
  return {random_text(rng), random_int(rng), random_text(rng), random_int(rng), random_int(rng)};
}

inline ModuleEntry random_module(Rng& rng) {
  return {random_hex_address(rng), random_hex_address(rng), random_int(rng), random_text(rng), random_text(rng)};
}

template <typename T, typename Fn>
std::vector<T> random_list(Rng& rng, Fn make, std::size_t max_n = 3) {
  std::vector<T> v;
  for (std::size_t i = 0, n = below(rng, max_n + 1); i < n; ++i) v.push_back(make(rng));
  return v;
}

inline ProcessDescriptor random_process(Rng& rng) {
  ProcessDescriptor p;
  p.pid = random_int(rng);
  p.path = random_text(rng);
  p.hash = random_text(rng);
  p.created = random_int(rng);
  p.modified = random_int(rng);
  p.command_line = random_text(rng, 60);
  p.integrity_level = random_enum<IntegrityLevel>(rng, 5);
  p.loaded_resources = random_list<ResourceEntry>(rng, random_resource);
  p.loaded_modules = random_list<ModuleEntry>(rng, random_module);
  p.opened_resources = random_list<ResourceEntry>(rng, random_resource);
  return p;
}

inline PeBlock random_pe(Rng& rng) {
  PeBlock b;
  b.pe_type = random_enum<PeType>(rng, 2);
  b.section_count = random_int(rng);
  for (std::size_t i = 0, n = below(rng, 4); i < n; ++i) {
    b.sections.push_back({random_text(rng, 8), random_int(rng), random_int(rng), random_int(rng)});
  }
  b.import_count = random_int(rng);
  b.export_count = random_int(rng);
  b.import_names = random_strings(rng);
  b.export_names = random_strings(rng);
  b.export_module_name = random_text(rng);
  b.characteristics = random_int(rng);
  b.compile_timestamp = random_int(rng);
  b.is_signed = random_bool(rng);
  b.arch = random_enum<Arch>(rng, 2);
  b.entry_point_rva = random_int(rng);
  if (!coin(rng, 0.2)) b.entropy_bits = std::uniform_real_distribution<double>(0.0, 8.0)(rng);
  b.file_size = random_int(rng);
  b.pdb_path = random_text(rng);
  b.created = random_int(rng);
  b.modified = random_int(rng);
  return b;
}

// A valid CanonicalLog exercising every field, with optional parts randomly absent.
inline CanonicalLog random_log(Rng& rng) {
  CanonicalLog log;
  if (!coin(rng, 0.2)) log.label = coin(rng) ? Label::Malicious : Label::Benign;
  auto& a = log.anonymized;
  a.username = random_text(rng);
  a.domain_name = random_text(rng);
  a.machine_name = random_text(rng);
  a.ip_address = random_text(rng);
  a.serial_number = random_text(rng);

  auto& m = log.metadata;
  m.timestamp = random_int(rng);
  m.os_name = random_text(rng);
  m.os_build = random_text(rng);
  m.exe_path = random_text(rng);
  m.exe_name = random_text(rng);
  m.exe_hash = random_text(rng);
  m.file_created = random_int(rng);
  m.file_modified = random_int(rng);
  m.referral_url = random_text(rng);
  m.user_login_time = random_int(rng);
  m.thread_count = random_int(rng);
  m.integrity_level = random_enum<IntegrityLevel>(rng, 5);
  m.exe_arch = random_enum<Arch>(rng, 2);
  m.work_cycles = random_int(rng);
  m.kernel_time_ms = random_int(rng);
  m.process_id = random_int(rng);
  m.thread_id = random_int(rng);
  m.privilege_level = random_enum<PrivilegeLevel>(rng, 3);
  m.timezone = random_text(rng);

  auto& r = log.runtime;
  r.base_address = random_hex_address(rng);
  r.command_line = random_text(rng, 80);
  for (std::size_t i = 0, n = below(rng, 5); i < n; ++i) r.registers[random_text(rng, 4)] = random_hex_address(rng);
  for (std::size_t i = 0, n = below(rng, 3); i < n; ++i) r.register_snippets[random_text(rng, 4)] = random_bytes(rng);
  r.eflags = random_hex_address(rng);
  r.signature = random_text(rng);
  r.loaded_resources = random_list<ResourceEntry>(rng, random_resource);
  r.vmem_free = random_int(rng);
  r.vmem_used = random_int(rng);
  r.hklm_run_entries = random_strings(rng);
  r.dep_enabled = random_bool(rng);
  r.illegal_accesses =
      random_list<IllegalAccess>(rng, [](Rng& g) { return IllegalAccess{random_hex_address(g), random_bytes(g)}; });
  r.import_table_hash = random_text(rng);
  if (coin(rng)) r.injector = Injector{random_int(rng), random_int(rng), random_text(rng), random_text(rng)};
  r.auto_elevate = random_bool(rng);
  r.loaded_modules = random_list<ModuleEntry>(rng, random_module);
  r.opened_resources = random_list<ResourceEntry>(rng, random_resource);
  if (coin(rng)) r.parent_process = random_process(rng);
  r.process_blocks = random_strings(rng);
  r.stack_snapshot = random_bytes(rng, 64);
  r.stack_trace = random_strings(rng, 6);
  r.embedded_files = random_list<EmbeddedFile>(rng, [](Rng& g) { return EmbeddedFile{random_text(g), random_int(g)}; });
  r.found_urls = random_strings(rng);
  r.found_ips = random_strings(rng);
  r.scheduled_tasks = random_strings(rng);
  r.registry_attempts =
      random_list<RegistryAttempt>(rng, [](Rng& g) { return RegistryAttempt{random_text(g), random_text(g)}; });
  if (coin(rng, 0.7)) log.pe = random_pe(rng);
  return log;
}

// Schema-walking validator for canonical log JSON: checks key sets, value
// types and ranges independently of the parser. Returns the offending paths.
class SchemaValidator {
 public:
  std::vector<std::string> validate(const nlohmann::json& doc) {
    problems_.clear();
    object(doc, "", {"label", "anonymized", "metadata", "runtime", "pe"});
    if (problems_.empty()) {
      enum_or_null(doc["label"], "label", {"benign", "malicious"});
      anonymized(doc["anonymized"]);
      metadata(doc["metadata"]);
      runtime(doc["runtime"]);
      if (!doc["pe"].is_null()) pe(doc["pe"], "pe");
    }
    return problems_;
  }

 private:
  using json = nlohmann::json;

  void fail(const std::string& path, const std::string& why) { problems_.push_back(path + ": " + why); }

  bool object(const json& j, const std::string& path, std::set<std::string> keys) {
    if (!j.is_object()) {
      fail(path, "not an object");
      return false;
    }
    std::set<std::string> seen;
    for (const auto& [k, v] : j.items()) seen.insert(k);
    if (seen != keys) {
      fail(path, "key set differs");
      return false;
    }
    return true;
  }
  void str(const json& j, const std::string& p) {
    if (!j.is_string()) fail(p, "not a string");
  }
  void count(const json& j, const std::string& p) {
    if (j.is_null()) return;
    if (!j.is_number_integer() || j.get<std::int64_t>() < 0) fail(p, "not a non-negative integer");
  }
  void boolean(const json& j, const std::string& p) {
    if (!j.is_null() && !j.is_boolean()) fail(p, "not a boolean");
  }
  void hex_address(const json& j, const std::string& p) {
    if (!j.is_string()) return fail(p, "not a string");
    std::string s = j.get<std::string>();
    if (s.empty()) return;
    if (s.rfind("0x", 0) == 0 || s.rfind("0X", 0) == 0) s = s.substr(2);
    if (s.empty() || s.size() > 16 || !std::all_of(s.begin(), s.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); })) {
      fail(p, "not a hex address");
    }
  }
  void hex_bytes(const json& j, const std::string& p) {
    if (!j.is_string()) return fail(p, "not a string");
    const auto& s = j.get_ref<const std::string&>();
    if (s.size() % 2 != 0 || !std::all_of(s.begin(), s.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); })) {
      fail(p, "not hex bytes");
    }
  }
  void enum_or_null(const json& j, const std::string& p, std::set<std::string> allowed) {
    if (j.is_null()) return;
    if (!j.is_string() || !allowed.count(j.get<std::string>())) fail(p, "not a member of its enum");
  }
  template <typename Fn>
  void array(const json& j, const std::string& p, Fn each) {
    if (!j.is_array()) return fail(p, "not an array");
    for (std::size_t i = 0; i < j.size(); ++i) each(j[i], p + "[" + std::to_string(i) + "]");
  }
  void strings(const json& j, const std::string& p) {
    array(j, p, [this](const json& e, const std::string& ep) { str(e, ep); });
  }
  void resource(const json& j, const std::string& p) {
    if (!object(j, p, {"path", "size", "hash", "created", "modified"})) return;
    str(j["path"], p + ".path");
    count(j["size"], p + ".size");
    str(j["hash"], p + ".hash");
    count(j["created"], p + ".created");
    count(j["modified"], p + ".modified");
  }
  void module(const json& j, const std::string& p) {
    if (!object(j, p, {"base", "end", "size", "link_meta", "path"})) return;
    hex_address(j["base"], p + ".base");
    hex_address(j["end"], p + ".end");
    count(j["size"], p + ".size");
    str(j["link_meta"], p + ".link_meta");
    str(j["path"], p + ".path");
  }
  void resources(const json& j, const std::string& p) {
    array(j, p, [this](const json& e, const std::string& ep) { resource(e, ep); });
  }
  void modules(const json& j, const std::string& p) {
    array(j, p, [this](const json& e, const std::string& ep) { module(e, ep); });
  }
  void anonymized(const json& j) {
    if (!object(j, "anonymized", {"username", "domain_name", "machine_name", "ip_address", "serial_number"})) return;
    for (const auto& [k, v] : j.items()) str(v, "anonymized." + k);
  }
  void metadata(const json& j) {
    const std::string p = "metadata";
    if (!object(j, p, {"timestamp", "os_name", "os_build", "exe_path", "exe_name", "exe_hash", "file_created",
                       "file_modified", "referral_url", "user_login_time", "thread_count", "integrity_level",
                       "exe_arch", "work_cycles", "kernel_time_ms", "process_id", "thread_id", "privilege_level",
                       "timezone"})) {
      return;
    }
    for (const char* k : {"timestamp", "file_created", "file_modified", "user_login_time", "thread_count",
                          "work_cycles", "kernel_time_ms", "process_id", "thread_id"}) {
      count(j[k], p + "." + k);
    }
    for (const char* k : {"os_name", "os_build", "exe_path", "exe_name", "exe_hash", "referral_url", "timezone"}) {
      str(j[k], p + "." + k);
    }
    enum_or_null(j["integrity_level"], p + ".integrity_level", {"untrusted", "low", "medium", "high", "system"});
    enum_or_null(j["exe_arch"], p + ".exe_arch", {"x86", "x64"});
    enum_or_null(j["privilege_level"], p + ".privilege_level", {"guest", "standard", "administrator"});
  }
  void process(const json& j, const std::string& p) {
    if (!object(j, p, {"pid", "path", "hash", "created", "modified", "command_line", "integrity_level",
                       "loaded_resources", "loaded_modules", "opened_resources"})) {
      return;
    }
    count(j["pid"], p + ".pid");
    count(j["created"], p + ".created");
    count(j["modified"], p + ".modified");
    str(j["path"], p + ".path");
    str(j["hash"], p + ".hash");
    str(j["command_line"], p + ".command_line");
    enum_or_null(j["integrity_level"], p + ".integrity_level", {"untrusted", "low", "medium", "high", "system"});
    resources(j["loaded_resources"], p + ".loaded_resources");
    modules(j["loaded_modules"], p + ".loaded_modules");
    resources(j["opened_resources"], p + ".opened_resources");
  }
  void runtime(const json& j) {
    const std::string p = "runtime";
    if (!object(j, p, {"base_address", "command_line", "registers", "register_snippets", "eflags", "signature",
                       "loaded_resources", "vmem_free", "vmem_used", "hklm_run_entries", "dep_enabled",
                       "illegal_accesses", "import_table_hash", "injector", "auto_elevate", "loaded_modules",
                       "opened_resources", "parent_process", "process_blocks", "stack_snapshot", "stack_trace",
                       "embedded_files", "found_urls", "found_ips", "scheduled_tasks", "registry_attempts"})) {
      return;
    }
    hex_address(j["base_address"], p + ".base_address");
    str(j["command_line"], p + ".command_line");
    if (!j["registers"].is_object()) fail(p + ".registers", "not an object");
    else for (const auto& [k, v] : j["registers"].items()) hex_address(v, p + ".registers." + k);
    if (!j["register_snippets"].is_object()) fail(p + ".register_snippets", "not an object");
    else for (const auto& [k, v] : j["register_snippets"].items()) hex_bytes(v, p + ".register_snippets." + k);
    hex_address(j["eflags"], p + ".eflags");
    str(j["signature"], p + ".signature");
    resources(j["loaded_resources"], p + ".loaded_resources");
    count(j["vmem_free"], p + ".vmem_free");
    count(j["vmem_used"], p + ".vmem_used");
    strings(j["hklm_run_entries"], p + ".hklm_run_entries");
    boolean(j["dep_enabled"], p + ".dep_enabled");
    array(j["illegal_accesses"], p + ".illegal_accesses", [this](const json& e, const std::string& ep) {
      if (!object(e, ep, {"address", "bytes"})) return;
      hex_address(e["address"], ep + ".address");
      hex_bytes(e["bytes"], ep + ".bytes");
    });
    str(j["import_table_hash"], p + ".import_table_hash");
    if (!j["injector"].is_null() && object(j["injector"], p + ".injector", {"pid", "ppid", "hash", "path"})) {
      count(j["injector"]["pid"], p + ".injector.pid");
      count(j["injector"]["ppid"], p + ".injector.ppid");
      str(j["injector"]["hash"], p + ".injector.hash");
      str(j["injector"]["path"], p + ".injector.path");
    }
    boolean(j["auto_elevate"], p + ".auto_elevate");
    modules(j["loaded_modules"], p + ".loaded_modules");
    resources(j["opened_resources"], p + ".opened_resources");
    if (!j["parent_process"].is_null()) process(j["parent_process"], p + ".parent_process");
    strings(j["process_blocks"], p + ".process_blocks");
    hex_bytes(j["stack_snapshot"], p + ".stack_snapshot");
    strings(j["stack_trace"], p + ".stack_trace");
    array(j["embedded_files"], p + ".embedded_files", [this](const json& e, const std::string& ep) {
      if (!object(e, ep, {"magic_type", "offset"})) return;
      str(e["magic_type"], ep + ".magic_type");
      count(e["offset"], ep + ".offset");
    });
    strings(j["found_urls"], p + ".found_urls");
    strings(j["found_ips"], p + ".found_ips");
    strings(j["scheduled_tasks"], p + ".scheduled_tasks");
    array(j["registry_attempts"], p + ".registry_attempts", [this](const json& e, const std::string& ep) {
      if (!object(e, ep, {"key", "result"})) return;
      str(e["key"], ep + ".key");
      str(e["result"], ep + ".result");
    });
  }
  void pe(const json& j, const std::string& p) {
    if (!object(j, p, {"pe_type", "section_count", "sections", "import_count", "export_count", "import_names",
                       "export_names", "export_module_name", "characteristics", "compile_timestamp", "signed", "arch",
                       "entry_point_rva", "entropy_bits", "file_size", "pdb_path", "created", "modified"})) {
      return;
    }
    enum_or_null(j["pe_type"], p + ".pe_type", {"pe32", "pe32plus"});
    enum_or_null(j["arch"], p + ".arch", {"x86", "x64"});
    for (const char* k : {"section_count", "import_count", "export_count", "characteristics", "compile_timestamp",
                          "entry_point_rva", "file_size", "created", "modified"}) {
      count(j[k], p + "." + k);
    }
    array(j["sections"], p + ".sections", [this](const json& e, const std::string& ep) {
      if (!object(e, ep, {"name", "virtual_size", "raw_size", "characteristics"})) return;
      str(e["name"], ep + ".name");
      count(e["virtual_size"], ep + ".virtual_size");
      count(e["raw_size"], ep + ".raw_size");
      count(e["characteristics"], ep + ".characteristics");
    });
    strings(j["import_names"], p + ".import_names");
    strings(j["export_names"], p + ".export_names");
    str(j["export_module_name"], p + ".export_module_name");
    boolean(j["signed"], p + ".signed");
    const json& e = j["entropy_bits"];
    if (!e.is_null() && (!e.is_number() || e.get<double>() < 0.0 || e.get<double>() > 8.0)) {
      fail(p + ".entropy_bits", "outside [0,8]");
    }
    str(j["pdb_path"], p + ".pdb_path");
  }

  std::vector<std::string> problems_;
};

}  // namespace memlog::testing
