#include "memlog/logmodel.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <limits>
#include "json.hpp"

#include "memlog/error.hpp"

namespace memlog {

using nlohmann::json;

std::string_view to_string(Label v) { return v == Label::Malicious ? "malicious" : "benign"; }

std::string_view to_string(IntegrityLevel v) {
  switch (v) {
    case IntegrityLevel::Untrusted: return "untrusted";
    case IntegrityLevel::Low: return "low";
    case IntegrityLevel::Medium: return "medium";
    case IntegrityLevel::High: return "high";
    case IntegrityLevel::System: return "system";
  }
  return "";
}

std::string_view to_string(PrivilegeLevel v) {
  switch (v) {
    case PrivilegeLevel::Guest: return "guest";
    case PrivilegeLevel::Standard: return "standard";
    case PrivilegeLevel::Administrator: return "administrator";
  }
  return "";
}

std::string_view to_string(Arch v) { return v == Arch::X64 ? "x64" : "x86"; }
std::string_view to_string(PeType v) { return v == PeType::PE32Plus ? "pe32plus" : "pe32"; }

namespace {

// Empty means "not captured" for every address-valued field.
bool address_or_empty(std::string_view s) { return s.empty() || is_hex_address(s); }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

template <typename E, std::size_t N>
std::optional<E> enum_from(std::string_view s, const std::array<E, N>& values) {
  const std::string l = lower(s);
  for (E v : values) {
    if (to_string(v) == l) return v;
  }
  return std::nullopt;
}

constexpr std::array kLabels{Label::Benign, Label::Malicious};
constexpr std::array kIntegrity{IntegrityLevel::Untrusted, IntegrityLevel::Low, IntegrityLevel::Medium,
                                IntegrityLevel::High, IntegrityLevel::System};
constexpr std::array kPrivilege{PrivilegeLevel::Guest, PrivilegeLevel::Standard, PrivilegeLevel::Administrator};
constexpr std::array kArch{Arch::X86, Arch::X64};
constexpr std::array kPeType{PeType::PE32, PeType::PE32Plus};

// Strips a UTF-8 BOM and trailing commas before '}' / ']' outside strings.
std::string repair_syntax(std::string_view raw, std::size_t& repairs) {
  if (raw.size() >= 3 && static_cast<unsigned char>(raw[0]) == 0xEF && static_cast<unsigned char>(raw[1]) == 0xBB &&
      static_cast<unsigned char>(raw[2]) == 0xBF) {
    raw.remove_prefix(3);
    ++repairs;
  }
  std::string out;
  out.reserve(raw.size());
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (in_string) {
      out.push_back(c);
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == ',') {
      std::size_t j = i + 1;
      while (j < raw.size() && (raw[j] == ' ' || raw[j] == '\t' || raw[j] == '\n' || raw[j] == '\r')) ++j;
      if (j < raw.size() && (raw[j] == '}' || raw[j] == ']')) {
        ++repairs;
        continue;
      }
    }
    out.push_back(c);
  }
  return out;
}

// Walks a JSON object applying the cleaning rules: wrong types are dropped,
// out-of-range numbers clamped, absent / null values left empty.
class Cleaner {
 public:
  explicit Cleaner(CleaningReport& report) : report_(report) {}

  void drop(const std::string& path) { report_.dropped_fields.push_back(path); }
  void normalized(const std::string& path) { report_.normalized_fields.push_back(path); }

  // Returns the child value when present and non-null.
  static const json* child(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return nullptr;
    return &*it;
  }

  const json* object(const json& obj, const char* key, const std::string& path) {
    const json* v = child(obj, key);
    if (v && !v->is_object()) {
      drop(path);
      return nullptr;
    }
    return v;
  }

  void string(const json& obj, const char* key, const std::string& path, std::string& out) {
    const json* v = child(obj, key);
    if (!v) return;
    if (v->is_string()) {
      out = v->get<std::string>();
    } else {
      drop(path);
    }
  }

  void hex_address(const json& obj, const char* key, const std::string& path, std::string& out) {
    const json* v = child(obj, key);
    if (!v) return;
    if (v->is_string() && address_or_empty(v->get_ref<const std::string&>())) {
      out = v->get<std::string>();
    } else {
      drop(path);
    }
  }

  void bytes(const json& obj, const char* key, const std::string& path, Bytes& out) {
    const json* v = child(obj, key);
    if (!v) return;
    if (v->is_string()) {
      if (auto b = from_hex(v->get_ref<const std::string&>())) {
        out = std::move(*b);
        return;
      }
    }
    drop(path);
  }

  void integer(const json& obj, const char* key, const std::string& path, OptInt& out) {
    const json* v = child(obj, key);
    if (!v) return;
    integer_value(*v, path, out);
  }

  void integer_value(const json& v, const std::string& path, OptInt& out) {
    if (v.is_number_unsigned()) {
      const auto u = v.get<std::uint64_t>();
      constexpr auto kMax = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
      if (u > kMax) {
        out = std::numeric_limits<std::int64_t>::max();
        normalized(path);
      } else {
        out = static_cast<std::int64_t>(u);
      }
    } else if (v.is_number_integer()) {
      const auto i = v.get<std::int64_t>();
      if (i < 0) {
        out = 0;
        normalized(path);
      } else {
        out = i;
      }
    } else {
      drop(path);
    }
  }

  void real(const json& obj, const char* key, const std::string& path, std::optional<double>& out, double lo,
            double hi) {
    const json* v = child(obj, key);
    if (!v) return;
    if (!v->is_number()) {
      drop(path);
      return;
    }
    const double d = v->get<double>();
    if (d < lo) {
      out = lo;
      normalized(path);
    } else if (d > hi) {
      out = hi;
      normalized(path);
    } else {
      out = d;
    }
  }

  void boolean(const json& obj, const char* key, const std::string& path, std::optional<bool>& out) {
    const json* v = child(obj, key);
    if (!v) return;
    if (v->is_boolean()) {
      out = v->get<bool>();
    } else {
      drop(path);
    }
  }

  template <typename E, std::size_t N>
  void enumeration(const json& obj, const char* key, const std::string& path, std::optional<E>& out,
                   const std::array<E, N>& values) {
    const json* v = child(obj, key);
    if (!v) return;
    if (v->is_string()) {
      if (auto e = enum_from(v->get_ref<const std::string&>(), values)) {
        out = *e;
        return;
      }
    }
    drop(path);
  }

  // Array whose elements are parsed by `elem`; a non-array is dropped whole.
  template <typename T, typename Fn>
  void list(const json& obj, const char* key, const std::string& path, std::vector<T>& out, Fn elem) {
    const json* v = child(obj, key);
    if (!v) return;
    if (!v->is_array()) {
      drop(path);
      return;
    }
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string ep = path + "[" + std::to_string(i) + "]";
      if (auto parsed = elem((*v)[i], ep)) out.push_back(std::move(*parsed));
    }
  }

  void string_list(const json& obj, const char* key, const std::string& path, std::vector<std::string>& out) {
    list(obj, key, path, out, [this](const json& e, const std::string& ep) -> std::optional<std::string> {
      if (e.is_string()) return e.get<std::string>();
      drop(ep);
      return std::nullopt;
    });
  }

  template <typename V, typename Fn>
  void map(const json& obj, const char* key, const std::string& path, std::map<std::string, V>& out, Fn value) {
    const json* v = object(obj, key, path);
    if (!v) return;
    for (const auto& [name, item] : v->items()) {
      const std::string ep = path + "." + name;
      if (item.is_null()) continue;
      if (auto parsed = value(item, ep)) out.emplace(name, std::move(*parsed));
    }
  }

  // Wraps an object-typed list element parser: non-objects are dropped.
  template <typename T, typename Fn>
  auto object_elem(Fn fill) {
    return [this, fill](const json& e, const std::string& ep) -> std::optional<T> {
      if (!e.is_object()) {
        drop(ep);
        return std::nullopt;
      }
      T t{};
      fill(e, ep, t);
      return t;
    };
  }

 private:
  CleaningReport& report_;
};

void fill_resource(Cleaner& c, const json& o, const std::string& p, ResourceEntry& r) {
  c.string(o, "path", p + ".path", r.path);
  c.integer(o, "size", p + ".size", r.size);
  c.string(o, "hash", p + ".hash", r.hash);
  c.integer(o, "created", p + ".created", r.created);
  c.integer(o, "modified", p + ".modified", r.modified);
}

void fill_module(Cleaner& c, const json& o, const std::string& p, ModuleEntry& m) {
  c.hex_address(o, "base", p + ".base", m.base);
  c.hex_address(o, "end", p + ".end", m.end);
  c.integer(o, "size", p + ".size", m.size);
  c.string(o, "link_meta", p + ".link_meta", m.link_meta);
  c.string(o, "path", p + ".path", m.path);
}

void resource_list(Cleaner& c, const json& o, const char* key, const std::string& p, std::vector<ResourceEntry>& out) {
  c.list(o, key, p, out, c.object_elem<ResourceEntry>([&c](const json& e, const std::string& ep, ResourceEntry& r) {
    fill_resource(c, e, ep, r);
  }));
}

void module_list(Cleaner& c, const json& o, const char* key, const std::string& p, std::vector<ModuleEntry>& out) {
  c.list(o, key, p, out, c.object_elem<ModuleEntry>([&c](const json& e, const std::string& ep, ModuleEntry& m) {
    fill_module(c, e, ep, m);
  }));
}

void parse_anonymized(Cleaner& c, const json& o, AnonymizedBlock& a) {
  const std::string p = "anonymized";
  c.string(o, "username", p + ".username", a.username);
  c.string(o, "domain_name", p + ".domain_name", a.domain_name);
  c.string(o, "machine_name", p + ".machine_name", a.machine_name);
  c.string(o, "ip_address", p + ".ip_address", a.ip_address);
  c.string(o, "serial_number", p + ".serial_number", a.serial_number);
}

void parse_metadata(Cleaner& c, const json& o, MetadataBlock& m) {
  const std::string p = "metadata";
  c.integer(o, "timestamp", p + ".timestamp", m.timestamp);
  c.string(o, "os_name", p + ".os_name", m.os_name);
  c.string(o, "os_build", p + ".os_build", m.os_build);
  c.string(o, "exe_path", p + ".exe_path", m.exe_path);
  c.string(o, "exe_name", p + ".exe_name", m.exe_name);
  c.string(o, "exe_hash", p + ".exe_hash", m.exe_hash);
  c.integer(o, "file_created", p + ".file_created", m.file_created);
  c.integer(o, "file_modified", p + ".file_modified", m.file_modified);
  c.string(o, "referral_url", p + ".referral_url", m.referral_url);
  c.integer(o, "user_login_time", p + ".user_login_time", m.user_login_time);
  c.integer(o, "thread_count", p + ".thread_count", m.thread_count);
  c.enumeration(o, "integrity_level", p + ".integrity_level", m.integrity_level, kIntegrity);
  c.enumeration(o, "exe_arch", p + ".exe_arch", m.exe_arch, kArch);
  c.integer(o, "work_cycles", p + ".work_cycles", m.work_cycles);
  c.integer(o, "kernel_time_ms", p + ".kernel_time_ms", m.kernel_time_ms);
  c.integer(o, "process_id", p + ".process_id", m.process_id);
  c.integer(o, "thread_id", p + ".thread_id", m.thread_id);
  c.enumeration(o, "privilege_level", p + ".privilege_level", m.privilege_level, kPrivilege);
  c.string(o, "timezone", p + ".timezone", m.timezone);
}

void parse_process(Cleaner& c, const json& o, const std::string& p, ProcessDescriptor& d) {
  c.integer(o, "pid", p + ".pid", d.pid);
  c.string(o, "path", p + ".path", d.path);
  c.string(o, "hash", p + ".hash", d.hash);
  c.integer(o, "created", p + ".created", d.created);
  c.integer(o, "modified", p + ".modified", d.modified);
  c.string(o, "command_line", p + ".command_line", d.command_line);
  c.enumeration(o, "integrity_level", p + ".integrity_level", d.integrity_level, kIntegrity);
  resource_list(c, o, "loaded_resources", p + ".loaded_resources", d.loaded_resources);
  module_list(c, o, "loaded_modules", p + ".loaded_modules", d.loaded_modules);
  resource_list(c, o, "opened_resources", p + ".opened_resources", d.opened_resources);
}

void parse_runtime(Cleaner& c, const json& o, RuntimeBlock& r) {
  const std::string p = "runtime";
  c.hex_address(o, "base_address", p + ".base_address", r.base_address);
  c.string(o, "command_line", p + ".command_line", r.command_line);
  c.map(o, "registers", p + ".registers", r.registers,
        [&c](const json& v, const std::string& ep) -> std::optional<std::string> {
          if (v.is_string() && address_or_empty(v.get_ref<const std::string&>())) return v.get<std::string>();
          c.drop(ep);
          return std::nullopt;
        });
  c.map(o, "register_snippets", p + ".register_snippets", r.register_snippets,
        [&c](const json& v, const std::string& ep) -> std::optional<Bytes> {
          if (v.is_string()) {
            if (auto b = from_hex(v.get_ref<const std::string&>())) return b;
          }
          c.drop(ep);
          return std::nullopt;
        });
  c.hex_address(o, "eflags", p + ".eflags", r.eflags);
  c.string(o, "signature", p + ".signature", r.signature);
  resource_list(c, o, "loaded_resources", p + ".loaded_resources", r.loaded_resources);
  c.integer(o, "vmem_free", p + ".vmem_free", r.vmem_free);
  c.integer(o, "vmem_used", p + ".vmem_used", r.vmem_used);
  c.string_list(o, "hklm_run_entries", p + ".hklm_run_entries", r.hklm_run_entries);
  c.boolean(o, "dep_enabled", p + ".dep_enabled", r.dep_enabled);
  c.list(o, "illegal_accesses", p + ".illegal_accesses", r.illegal_accesses,
         c.object_elem<IllegalAccess>([&c](const json& e, const std::string& ep, IllegalAccess& a) {
           c.hex_address(e, "address", ep + ".address", a.address);
           c.bytes(e, "bytes", ep + ".bytes", a.bytes);
         }));
  c.string(o, "import_table_hash", p + ".import_table_hash", r.import_table_hash);
  if (const json* inj = c.object(o, "injector", p + ".injector")) {
    Injector i;
    const std::string ip = p + ".injector";
    c.integer(*inj, "pid", ip + ".pid", i.pid);
    c.integer(*inj, "ppid", ip + ".ppid", i.ppid);
    c.string(*inj, "hash", ip + ".hash", i.hash);
    c.string(*inj, "path", ip + ".path", i.path);
    r.injector = std::move(i);
  }
  c.boolean(o, "auto_elevate", p + ".auto_elevate", r.auto_elevate);
  module_list(c, o, "loaded_modules", p + ".loaded_modules", r.loaded_modules);
  resource_list(c, o, "opened_resources", p + ".opened_resources", r.opened_resources);
  if (const json* pp = c.object(o, "parent_process", p + ".parent_process")) {
    ProcessDescriptor d;
    parse_process(c, *pp, p + ".parent_process", d);
    r.parent_process = std::move(d);
  }
  c.string_list(o, "process_blocks", p + ".process_blocks", r.process_blocks);
  c.bytes(o, "stack_snapshot", p + ".stack_snapshot", r.stack_snapshot);
  c.string_list(o, "stack_trace", p + ".stack_trace", r.stack_trace);
  c.list(o, "embedded_files", p + ".embedded_files", r.embedded_files,
         c.object_elem<EmbeddedFile>([&c](const json& e, const std::string& ep, EmbeddedFile& f) {
           c.string(e, "magic_type", ep + ".magic_type", f.magic_type);
           c.integer(e, "offset", ep + ".offset", f.offset);
         }));
  c.string_list(o, "found_urls", p + ".found_urls", r.found_urls);
  c.string_list(o, "found_ips", p + ".found_ips", r.found_ips);
  c.string_list(o, "scheduled_tasks", p + ".scheduled_tasks", r.scheduled_tasks);
  c.list(o, "registry_attempts", p + ".registry_attempts", r.registry_attempts,
         c.object_elem<RegistryAttempt>([&c](const json& e, const std::string& ep, RegistryAttempt& a) {
           c.string(e, "key", ep + ".key", a.key);
           c.string(e, "result", ep + ".result", a.result);
         }));
}

void parse_pe_block(Cleaner& c, const json& o, PeBlock& b) {
  const std::string p = "pe";
  c.enumeration(o, "pe_type", p + ".pe_type", b.pe_type, kPeType);
  c.integer(o, "section_count", p + ".section_count", b.section_count);
  c.list(o, "sections", p + ".sections", b.sections,
         c.object_elem<PeSection>([&c](const json& e, const std::string& ep, PeSection& s) {
           c.string(e, "name", ep + ".name", s.name);
           c.integer(e, "virtual_size", ep + ".virtual_size", s.virtual_size);
           c.integer(e, "raw_size", ep + ".raw_size", s.raw_size);
           c.integer(e, "characteristics", ep + ".characteristics", s.characteristics);
         }));
  c.integer(o, "import_count", p + ".import_count", b.import_count);
  c.integer(o, "export_count", p + ".export_count", b.export_count);
  c.string_list(o, "import_names", p + ".import_names", b.import_names);
  c.string_list(o, "export_names", p + ".export_names", b.export_names);
  c.string(o, "export_module_name", p + ".export_module_name", b.export_module_name);
  c.integer(o, "characteristics", p + ".characteristics", b.characteristics);
  c.integer(o, "compile_timestamp", p + ".compile_timestamp", b.compile_timestamp);
  c.boolean(o, "signed", p + ".signed", b.is_signed);
  c.enumeration(o, "arch", p + ".arch", b.arch, kArch);
  c.integer(o, "entry_point_rva", p + ".entry_point_rva", b.entry_point_rva);
  c.real(o, "entropy_bits", p + ".entropy_bits", b.entropy_bits, 0.0, 8.0);
  c.integer(o, "file_size", p + ".file_size", b.file_size);
  c.string(o, "pdb_path", p + ".pdb_path", b.pdb_path);
  c.integer(o, "created", p + ".created", b.created);
  c.integer(o, "modified", p + ".modified", b.modified);
}

// ---- serialization ----

json opt(const OptInt& v) { return v ? json(*v) : json(nullptr); }
json opt(const std::optional<bool>& v) { return v ? json(*v) : json(nullptr); }
json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

template <typename E>
json opt_enum(const std::optional<E>& v) {
  return v ? json(std::string(to_string(*v))) : json(nullptr);
}

json to_json(const ResourceEntry& r) {
  return {{"path", r.path}, {"size", opt(r.size)}, {"hash", r.hash}, {"created", opt(r.created)},
          {"modified", opt(r.modified)}};
}

json to_json(const ModuleEntry& m) {
  return {{"base", m.base}, {"end", m.end}, {"size", opt(m.size)}, {"link_meta", m.link_meta}, {"path", m.path}};
}

template <typename T>
json list_json(const std::vector<T>& items) {
  json a = json::array();
  for (const auto& i : items) a.push_back(to_json(i));
  return a;
}

json to_json(const ProcessDescriptor& d) {
  return {{"pid", opt(d.pid)},
          {"path", d.path},
          {"hash", d.hash},
          {"created", opt(d.created)},
          {"modified", opt(d.modified)},
          {"command_line", d.command_line},
          {"integrity_level", opt_enum(d.integrity_level)},
          {"loaded_resources", list_json(d.loaded_resources)},
          {"loaded_modules", list_json(d.loaded_modules)},
          {"opened_resources", list_json(d.opened_resources)}};
}

json to_json(const PeBlock& b) {
  json sections = json::array();
  for (const auto& s : b.sections) {
    sections.push_back({{"name", s.name},
                        {"virtual_size", opt(s.virtual_size)},
                        {"raw_size", opt(s.raw_size)},
                        {"characteristics", opt(s.characteristics)}});
  }
  return {{"pe_type", opt_enum(b.pe_type)},
          {"section_count", opt(b.section_count)},
          {"sections", sections},
          {"import_count", opt(b.import_count)},
          {"export_count", opt(b.export_count)},
          {"import_names", b.import_names},
          {"export_names", b.export_names},
          {"export_module_name", b.export_module_name},
          {"characteristics", opt(b.characteristics)},
          {"compile_timestamp", opt(b.compile_timestamp)},
          {"signed", opt(b.is_signed)},
          {"arch", opt_enum(b.arch)},
          {"entry_point_rva", opt(b.entry_point_rva)},
          {"entropy_bits", opt(b.entropy_bits)},
          {"file_size", opt(b.file_size)},
          {"pdb_path", b.pdb_path},
          {"created", opt(b.created)},
          {"modified", opt(b.modified)}};
}

json to_json(const CanonicalLog& log) {
  const auto& a = log.anonymized;
  const auto& m = log.metadata;
  const auto& r = log.runtime;

  json registers = json::object();
  for (const auto& [k, v] : r.registers) registers[k] = v;
  json snippets = json::object();
  for (const auto& [k, v] : r.register_snippets) snippets[k] = to_hex(v);
  json illegal = json::array();
  for (const auto& i : r.illegal_accesses) illegal.push_back({{"address", i.address}, {"bytes", to_hex(i.bytes)}});
  json embedded = json::array();
  for (const auto& e : r.embedded_files) embedded.push_back({{"magic_type", e.magic_type}, {"offset", opt(e.offset)}});
  json registry = json::array();
  for (const auto& e : r.registry_attempts) registry.push_back({{"key", e.key}, {"result", e.result}});
  json injector = nullptr;
  if (r.injector) {
    injector = {{"pid", opt(r.injector->pid)},
                {"ppid", opt(r.injector->ppid)},
                {"hash", r.injector->hash},
                {"path", r.injector->path}};
  }

  json j;
  j["label"] = opt_enum(log.label);
  j["anonymized"] = {{"username", a.username},
                     {"domain_name", a.domain_name},
                     {"machine_name", a.machine_name},
                     {"ip_address", a.ip_address},
                     {"serial_number", a.serial_number}};
  j["metadata"] = {{"timestamp", opt(m.timestamp)},
                   {"os_name", m.os_name},
                   {"os_build", m.os_build},
                   {"exe_path", m.exe_path},
                   {"exe_name", m.exe_name},
                   {"exe_hash", m.exe_hash},
                   {"file_created", opt(m.file_created)},
                   {"file_modified", opt(m.file_modified)},
                   {"referral_url", m.referral_url},
                   {"user_login_time", opt(m.user_login_time)},
                   {"thread_count", opt(m.thread_count)},
                   {"integrity_level", opt_enum(m.integrity_level)},
                   {"exe_arch", opt_enum(m.exe_arch)},
                   {"work_cycles", opt(m.work_cycles)},
                   {"kernel_time_ms", opt(m.kernel_time_ms)},
                   {"process_id", opt(m.process_id)},
                   {"thread_id", opt(m.thread_id)},
                   {"privilege_level", opt_enum(m.privilege_level)},
                   {"timezone", m.timezone}};
  j["runtime"] = {{"base_address", r.base_address},
                  {"command_line", r.command_line},
                  {"registers", registers},
                  {"register_snippets", snippets},
                  {"eflags", r.eflags},
                  {"signature", r.signature},
                  {"loaded_resources", list_json(r.loaded_resources)},
                  {"vmem_free", opt(r.vmem_free)},
                  {"vmem_used", opt(r.vmem_used)},
                  {"hklm_run_entries", r.hklm_run_entries},
                  {"dep_enabled", opt(r.dep_enabled)},
                  {"illegal_accesses", illegal},
                  {"import_table_hash", r.import_table_hash},
                  {"injector", injector},
                  {"auto_elevate", opt(r.auto_elevate)},
                  {"loaded_modules", list_json(r.loaded_modules)},
                  {"opened_resources", list_json(r.opened_resources)},
                  {"parent_process", r.parent_process ? to_json(*r.parent_process) : json(nullptr)},
                  {"process_blocks", r.process_blocks},
                  {"stack_snapshot", to_hex(r.stack_snapshot)},
                  {"stack_trace", r.stack_trace},
                  {"embedded_files", embedded},
                  {"found_urls", r.found_urls},
                  {"found_ips", r.found_ips},
                  {"scheduled_tasks", r.scheduled_tasks},
                  {"registry_attempts", registry}};
  j["pe"] = log.pe ? to_json(*log.pe) : json(nullptr);
  return j;
}

std::string pseudonym(std::string_view value, std::span<const std::uint8_t> salt) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  static const unsigned char kEmptyKey = 0;
  const void* key = salt.empty() ? static_cast<const void*>(&kEmptyKey) : salt.data();
  if (!HMAC(EVP_sha256(), key, static_cast<int>(salt.size()), reinterpret_cast<const unsigned char*>(value.data()),
            value.size(), md.data(), &len)) {
    throw Error(ErrorCode::Internal, "HMAC-SHA256 failed");
  }
  return "anon:" + to_hex(std::span<const std::uint8_t>(md.data(), 16));
}

void anonymize_field(std::string& field, std::span<const std::uint8_t> salt) {
  if (field.empty() || is_pseudonym(field)) return;
  field = pseudonym(field, salt);
}

}  // namespace

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0F]);
  }
  return out;
}

std::optional<Bytes> from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = nibble(hex[i]);
    const int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return out;
}

bool is_hex_address(std::string_view s) {
  if (s.size() >= 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) s.remove_prefix(2);
  if (s.empty() || s.size() > 16) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; });
}

bool is_pseudonym(std::string_view value) {
  constexpr std::string_view kPrefix = "anon:";
  if (value.size() != kPrefix.size() + 32 || !value.starts_with(kPrefix)) return false;
  value.remove_prefix(kPrefix.size());
  return std::all_of(value.begin(), value.end(),
                     [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

ParsedLog parse_log(std::string_view raw, const ParseOptions& options) {
  if (raw.size() > options.max_bytes) {
    throw Error(ErrorCode::OversizeLog,
                std::to_string(raw.size()) + " bytes exceeds cap of " + std::to_string(options.max_bytes));
  }
  ParsedLog out;
  const std::string text = repair_syntax(raw, out.report.parse_repairs);
  if (std::all_of(text.begin(), text.end(), [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; })) {
    throw Error(ErrorCode::EmptyDocument, "log document is empty");
  }

  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw Error(ErrorCode::NotJson, "unrecoverable JSON syntax");
  if (!doc.is_object()) throw Error(ErrorCode::NotJson, "top-level value is not an object");

  Cleaner c(out.report);
  CanonicalLog& log = out.log;
  c.enumeration(doc, "label", "label", log.label, kLabels);
  if (const json* a = c.object(doc, "anonymized", "anonymized")) parse_anonymized(c, *a, log.anonymized);
  if (const json* m = c.object(doc, "metadata", "metadata")) parse_metadata(c, *m, log.metadata);
  if (const json* r = c.object(doc, "runtime", "runtime")) parse_runtime(c, *r, log.runtime);
  if (const json* p = c.object(doc, "pe", "pe")) {
    PeBlock b;
    parse_pe_block(c, *p, b);
    log.pe = std::move(b);
  }
  return out;
}

std::string serialize_log(const CanonicalLog& log) {
  try {
    return to_json(log).dump();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("log is not serializable: ") + e.what());
  }
}

CanonicalLog anonymize(const CanonicalLog& log, std::span<const std::uint8_t> salt) {
  CanonicalLog out = log;
  anonymize_field(out.anonymized.username, salt);
  anonymize_field(out.anonymized.domain_name, salt);
  anonymize_field(out.anonymized.machine_name, salt);
  anonymize_field(out.anonymized.ip_address, salt);
  anonymize_field(out.anonymized.serial_number, salt);
  return out;
}

}  // namespace memlog
