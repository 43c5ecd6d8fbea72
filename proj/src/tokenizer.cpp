#include "memlog/tokenizer.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace memlog {

std::string_view to_string(GroupId g) {
  switch (g) {
    case GroupId::Stack: return "stack";
    case GroupId::Registers: return "registers";
    case GroupId::Opcodes: return "opcodes";
    case GroupId::Modules: return "modules";
    case GroupId::Resources: return "resources";
    case GroupId::ProcessMeta: return "process_meta";
  }
  return "";
}

std::size_t GroupedTokens::total() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.size();
  return n;
}

namespace {

std::string normalize_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    out.push_back(std::isspace(u) ? '_' : static_cast<char>(std::tolower(u)));
  }
  return out;
}

std::string_view basename(std::string_view path) {
  const auto cut = path.find_last_of("\\/");
  return cut == std::string_view::npos ? path : path.substr(cut + 1);
}

std::optional<std::uint64_t> parse_hex(std::string_view s) {
  if (s.size() >= 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) s.remove_prefix(2);
  if (s.empty() || s.size() > 16) return std::nullopt;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

class Emitter {
 public:
  explicit Emitter(GroupedTokens& out) : out_(out) {}

  void add(GroupId g, std::string_view raw, FieldKind kind = FieldKind::Text) {
    std::string t = canonicalize_value(raw, kind);
    if (!t.empty()) out_[g].push_back(std::move(t));
  }

  // "name=value" pairs for categorical scalars.
  void keyed(GroupId g, std::string_view key, std::string_view value) {
    if (value.empty()) return;
    add(g, std::string(key) + "=" + std::string(value));
  }

  template <typename T>
  void keyed(GroupId g, std::string_view key, const std::optional<T>& value) {
    if (value) keyed(g, key, std::to_string(*value));
  }

  void words(GroupId g, std::string_view text) {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      std::size_t j = i;
      while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j > i) add(g, text.substr(i, j - i));
      i = j;
    }
  }

  void bytes(GroupId g, std::span<const std::uint8_t> b) {
    for (auto& w : hex_words(b)) out_[g].push_back(std::move(w));
  }

 private:
  GroupedTokens& out_;
};

void emit_resources(Emitter& e, const std::vector<ResourceEntry>& list) {
  for (const auto& r : list) e.add(GroupId::Resources, r.path, FieldKind::Path);
}

void emit_pe(Emitter& e, const PeBlock& pe) {
  constexpr auto g = GroupId::ProcessMeta;
  if (pe.pe_type) e.keyed(g, "pe.type", to_string(*pe.pe_type));
  if (pe.arch) e.keyed(g, "pe.arch", to_string(*pe.arch));
  e.keyed(g, "pe.sections", pe.section_count);
  e.keyed(g, "pe.imports", pe.import_count);
  e.keyed(g, "pe.exports", pe.export_count);
  e.keyed(g, "pe.characteristics", pe.characteristics);
  e.keyed(g, "pe.compiled", pe.compile_timestamp);
  if (pe.is_signed) e.keyed(g, "pe.signed", *pe.is_signed ? "true" : "false");
  if (pe.entry_point_rva) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(*pe.entry_point_rva));
    e.keyed(g, "pe.entry", canonicalize_value(buf, FieldKind::Address));
  }
  if (pe.entropy_bits) {
    // One decimal keeps the value categorical; raw doubles would all be unique.
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.1f", *pe.entropy_bits);
    e.keyed(g, "pe.entropy", buf);
  }
  e.keyed(g, "pe.size", pe.file_size);
  e.keyed(g, "pe.export_name", pe.export_module_name);
  e.keyed(g, "pe.pdb", canonicalize_value(pe.pdb_path, FieldKind::Path));
}

}  // namespace

std::string canonicalize_value(std::string_view raw, FieldKind kind) {
  switch (kind) {
    case FieldKind::Address:
      if (auto v = parse_hex(raw)) {
        char buf[24];
        std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(*v & ~std::uint64_t{0xFFF}));
        return buf;
      }
      return normalize_text(raw);
    case FieldKind::Path:
      return normalize_text(basename(raw));
    case FieldKind::Text:
      break;
  }
  return normalize_text(raw);
}

std::vector<std::string> hex_words(std::span<const std::uint8_t> bytes) {
  std::vector<std::string> out;
  out.reserve((bytes.size() + 3) / 4);
  for (std::size_t i = 0; i < bytes.size(); i += 4) {
    out.push_back(to_hex(bytes.subspan(i, std::min<std::size_t>(4, bytes.size() - i))));
  }
  return out;
}

GroupedTokens tokenize(const CanonicalLog& log) {
  GroupedTokens out;
  Emitter e(out);
  const auto& r = log.runtime;
  const auto& m = log.metadata;

  for (const auto& frame : r.stack_trace) e.add(GroupId::Stack, frame);
  e.bytes(GroupId::Stack, r.stack_snapshot);

  for (const auto& [name, value] : r.registers) {
    e.add(GroupId::Registers, name + "=" + canonicalize_value(value, FieldKind::Address));
  }
  e.keyed(GroupId::Registers, "eflags", r.eflags);

  for (const auto& [name, snippet] : r.register_snippets) e.bytes(GroupId::Opcodes, snippet);
  for (const auto& access : r.illegal_accesses) e.bytes(GroupId::Opcodes, access.bytes);

  for (const auto& mod : r.loaded_modules) e.add(GroupId::Modules, mod.path, FieldKind::Path);

  emit_resources(e, r.loaded_resources);
  emit_resources(e, r.opened_resources);
  for (const auto& f : r.embedded_files) e.add(GroupId::Resources, f.magic_type);
  for (const auto& u : r.found_urls) e.add(GroupId::Resources, u);
  for (const auto& ip : r.found_ips) e.add(GroupId::Resources, ip);
  for (const auto& t : r.scheduled_tasks) e.add(GroupId::Resources, t);
  for (const auto& h : r.hklm_run_entries) e.add(GroupId::Resources, h);

  constexpr auto meta = GroupId::ProcessMeta;
  e.add(meta, m.exe_name, FieldKind::Path);
  e.add(meta, m.exe_hash);
  if (m.integrity_level) e.keyed(meta, "integrity", to_string(*m.integrity_level));
  if (m.privilege_level) e.keyed(meta, "privilege", to_string(*m.privilege_level));
  if (m.exe_arch) e.keyed(meta, "arch", to_string(*m.exe_arch));
  e.keyed(meta, "os", canonicalize_value(m.os_name, FieldKind::Text));
  e.words(meta, r.command_line);
  if (const auto& p = r.parent_process) {
    e.keyed(meta, "parent", canonicalize_value(p->path, FieldKind::Path));
    e.keyed(meta, "parent_hash", canonicalize_value(p->hash, FieldKind::Text));
    if (p->integrity_level) e.keyed(meta, "parent_integrity", to_string(*p->integrity_level));
    e.words(meta, p->command_line);
  }
  if (log.pe) emit_pe(e, *log.pe);
  return out;
}

}  // namespace memlog
