#include "memlog/pe.hpp"

#include <array>
#include <cmath>
#include <string_view>

#include "memlog/error.hpp"

namespace memlog {

namespace {

constexpr std::uint16_t kMachineI386 = 0x014C;
constexpr std::uint16_t kMachineAmd64 = 0x8664;
constexpr std::uint16_t kMagicPe32 = 0x10B;
constexpr std::uint16_t kMagicPe32Plus = 0x20B;
constexpr std::uint16_t kMaxSections = 96;
constexpr std::size_t kSectionHeaderSize = 40;
constexpr std::size_t kMaxImportDescriptors = 1024;
constexpr std::size_t kMaxNameLength = 256;

enum DataDirectory : std::size_t { kExport = 0, kImport = 1, kSecurity = 4, kDebug = 6 };

// Bounds-checked little-endian reads; failures throw Error with the given code.
class View {
 public:
  View(std::span<const std::uint8_t> data, ErrorCode code) : data_(data), code_(code) {}

  bool has(std::size_t off, std::size_t n) const { return off <= data_.size() && n <= data_.size() - off; }

  void need(std::size_t off, std::size_t n, std::string_view what) const {
    if (!has(off, n)) throw Error(code_, std::string(what) + " out of bounds at offset " + std::to_string(off));
  }

  std::uint16_t u16(std::size_t off) const {
    need(off, 2, "u16");
    return static_cast<std::uint16_t>(data_[off] | data_[off + 1] << 8);
  }

  std::uint32_t u32(std::size_t off) const {
    need(off, 4, "u32");
    return static_cast<std::uint32_t>(data_[off]) | static_cast<std::uint32_t>(data_[off + 1]) << 8 |
           static_cast<std::uint32_t>(data_[off + 2]) << 16 | static_cast<std::uint32_t>(data_[off + 3]) << 24;
  }

  std::uint64_t u64(std::size_t off) const { return u32(off) | static_cast<std::uint64_t>(u32(off + 4)) << 32; }

  // NUL-terminated ASCII; bytes outside printable ASCII become '?'.
  std::string cstr(std::size_t off, std::size_t max_len) const {
    need(off, 1, "string");
    std::string out;
    for (std::size_t i = off; i < data_.size() && out.size() < max_len; ++i) {
      const std::uint8_t c = data_[i];
      if (c == 0) return out;
      out.push_back(c >= 0x20 && c < 0x7F ? static_cast<char>(c) : '?');
    }
    if (out.size() >= max_len) return out;
    throw Error(code_, "unterminated string at offset " + std::to_string(off));
  }

  std::size_t size() const { return data_.size(); }
  ErrorCode code() const { return code_; }
  View with_code(ErrorCode code) const { return View(data_, code); }

 private:
  std::span<const std::uint8_t> data_;
  ErrorCode code_;
};

struct RawSection {
  std::uint32_t virtual_size;
  std::uint32_t virtual_address;
  std::uint32_t raw_size;
  std::uint32_t raw_pointer;
};

struct Layout {
  bool pe32_plus = false;
  std::uint32_t size_of_headers = 0;
  std::vector<RawSection> sections;
  std::array<std::pair<std::uint32_t, std::uint32_t>, 16> directories{};  // (rva, size)
};

std::size_t rva_to_offset(const Layout& layout, const View& v, std::uint32_t rva) {
  if (rva < layout.size_of_headers && rva < v.size()) return rva;
  for (const auto& s : layout.sections) {
    const std::uint64_t extent = std::max(s.virtual_size, s.raw_size);
    if (rva >= s.virtual_address && rva < static_cast<std::uint64_t>(s.virtual_address) + extent) {
      const std::uint64_t off = static_cast<std::uint64_t>(s.raw_pointer) + (rva - s.virtual_address);
      if (off < v.size()) return static_cast<std::size_t>(off);
      break;
    }
  }
  throw Error(v.code(), "RVA 0x" + std::to_string(rva) + " does not map into the file");
}

void parse_imports(const Layout& layout, const View& v, const PeParseOptions& options, PeBlock& out,
                   std::vector<std::string>& warnings) {
  const auto [dir_rva, dir_size] = layout.directories[kImport];
  if (dir_rva == 0 || dir_size == 0) {
    out.import_count = 0;
    return;
  }
  std::size_t desc = rva_to_offset(layout, v, dir_rva);
  const std::size_t thunk_size = layout.pe32_plus ? 8 : 4;
  const std::uint64_t ordinal_flag = layout.pe32_plus ? (1ULL << 63) : 0x80000000ULL;
  std::int64_t count = 0;
  for (std::size_t d = 0; d < kMaxImportDescriptors; ++d, desc += 20) {
    const std::uint32_t lookup = v.u32(desc);
    const std::uint32_t name_rva = v.u32(desc + 12);
    const std::uint32_t first_thunk = v.u32(desc + 16);
    if (lookup == 0 && name_rva == 0 && first_thunk == 0) break;
    const std::string dll = v.cstr(rva_to_offset(layout, v, name_rva), kMaxNameLength);
    std::size_t thunk = rva_to_offset(layout, v, lookup != 0 ? lookup : first_thunk);
    for (;; thunk += thunk_size) {
      const std::uint64_t entry = layout.pe32_plus ? v.u64(thunk) : v.u32(thunk);
      if (entry == 0) break;
      if (out.import_names.size() >= options.max_import_names) {
        warnings.push_back("import name cap of " + std::to_string(options.max_import_names) + " reached");
        out.import_count = count;
        return;
      }
      if (entry & ordinal_flag) {
        out.import_names.push_back(dll + "!#" + std::to_string(entry & 0xFFFF));
      } else {
        const auto hint_name = rva_to_offset(layout, v, static_cast<std::uint32_t>(entry & 0x7FFFFFFF));
        out.import_names.push_back(dll + "!" + v.cstr(hint_name + 2, kMaxNameLength));
      }
      ++count;
    }
  }
  out.import_count = count;
}

void parse_exports(const Layout& layout, const View& v, const PeParseOptions& options, PeBlock& out,
                   std::vector<std::string>& warnings) {
  const auto [dir_rva, dir_size] = layout.directories[kExport];
  if (dir_rva == 0 || dir_size == 0) {
    out.export_count = 0;
    return;
  }
  const std::size_t dir = rva_to_offset(layout, v, dir_rva);
  v.need(dir, 40, "export directory");
  const std::uint32_t name_rva = v.u32(dir + 12);
  const std::uint32_t function_count = v.u32(dir + 20);
  const std::uint32_t name_count = v.u32(dir + 24);
  const std::uint32_t names_rva = v.u32(dir + 32);
  // Every exported function needs a 4-byte address slot somewhere in the file.
  if (function_count > v.size() / 4 || name_count > function_count) {
    throw Error(v.code(), "implausible export counts");
  }
  if (name_rva != 0) out.export_module_name = v.cstr(rva_to_offset(layout, v, name_rva), kMaxNameLength);
  if (name_count > 0) {
    const std::size_t names = rva_to_offset(layout, v, names_rva);
    for (std::uint32_t i = 0; i < name_count; ++i) {
      if (out.export_names.size() >= options.max_export_names) {
        warnings.push_back("export name cap of " + std::to_string(options.max_export_names) + " reached");
        break;
      }
      out.export_names.push_back(v.cstr(rva_to_offset(layout, v, v.u32(names + 4 * std::size_t{i})), kMaxNameLength));
    }
  }
  out.export_count = function_count;
}

// CodeView RSDS record: "RSDS", 16-byte GUID, u32 age, NUL-terminated path.
void parse_debug(const Layout& layout, const View& v, PeBlock& out) {
  const auto [dir_rva, dir_size] = layout.directories[kDebug];
  if (dir_rva == 0 || dir_size < 28) return;
  const std::size_t dir = rva_to_offset(layout, v, dir_rva);
  for (std::size_t i = 0; i < dir_size / 28 && i < 16; ++i) {
    const std::size_t entry = dir + 28 * i;
    if (v.u32(entry + 12) != 2) continue;
    const std::uint32_t data_size = v.u32(entry + 16);
    const std::size_t ptr = v.u32(entry + 24);
    if (data_size < 25 || !v.has(ptr, data_size)) continue;
    if (v.u32(ptr) != 0x53445352) continue;  // "RSDS"
    out.pdb_path = v.cstr(ptr + 24, kMaxNameLength);
    return;
  }
}

}  // namespace

double shannon_entropy(std::span<const std::uint8_t> data) {
  if (data.empty()) throw Error(ErrorCode::EmptyInput, "entropy of empty data");
  std::array<std::uint64_t, 256> counts{};
  for (std::uint8_t b : data) ++counts[b];
  const double n = static_cast<double>(data.size());
  double h = 0.0;
  for (std::uint64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  // -0.0 for a single symbol; rounding can also nudge the top end past 8.
  return std::clamp(h, 0.0, 8.0) + 0.0;
}

PeParseResult parse_pe(std::span<const std::uint8_t> image, const PeParseOptions& options) {
  const View hdr(image, ErrorCode::TruncatedHeader);
  if (image.size() >= 2 && (image[0] != 'M' || image[1] != 'Z')) {
    throw Error(ErrorCode::BadDosMagic, "image does not start with MZ");
  }
  if (image.size() < 64) throw Error(ErrorCode::TruncatedHeader, "image shorter than a DOS header");

  const std::size_t nt = hdr.u32(0x3C);
  hdr.need(nt, 4, "PE signature");
  if (hdr.u32(nt) != 0x00004550) throw Error(ErrorCode::BadPeSignature, "missing PE\\0\\0 signature");

  const std::size_t coff = nt + 4;
  const std::uint16_t machine = hdr.u16(coff);
  const std::uint16_t section_count = hdr.u16(coff + 2);
  const std::uint32_t timestamp = hdr.u32(coff + 4);
  const std::uint16_t optional_size = hdr.u16(coff + 16);
  const std::uint16_t characteristics = hdr.u16(coff + 18);

  const std::size_t opt = coff + 20;
  const std::uint16_t magic = hdr.u16(opt);
  Layout layout;
  if (magic == kMagicPe32) {
    layout.pe32_plus = false;
  } else if (magic == kMagicPe32Plus) {
    layout.pe32_plus = true;
  } else {
    throw Error(ErrorCode::BadPeSignature, "unknown optional header magic " + std::to_string(magic));
  }
  if ((machine == kMachineI386 && layout.pe32_plus) || (machine == kMachineAmd64 && !layout.pe32_plus)) {
    throw Error(ErrorCode::BadPeSignature, "machine type contradicts optional header magic");
  }
  const std::size_t dirs_at = layout.pe32_plus ? 112 : 96;
  if (optional_size < dirs_at) throw Error(ErrorCode::TruncatedHeader, "optional header too small");
  hdr.need(opt, optional_size, "optional header");

  PeParseResult result;
  PeBlock& out = result.block;
  out.pe_type = layout.pe32_plus ? PeType::PE32Plus : PeType::PE32;
  out.arch = layout.pe32_plus ? Arch::X64 : Arch::X86;
  out.characteristics = characteristics;
  out.compile_timestamp = timestamp;
  out.entry_point_rva = hdr.u32(opt + 16);
  layout.size_of_headers = hdr.u32(opt + 60);

  const std::uint32_t rva_count = hdr.u32(opt + (layout.pe32_plus ? 108 : 92));
  const std::size_t usable = std::min<std::size_t>({rva_count, 16, (optional_size - dirs_at) / 8});
  for (std::size_t i = 0; i < usable; ++i) {
    layout.directories[i] = {hdr.u32(opt + dirs_at + 8 * i), hdr.u32(opt + dirs_at + 8 * i + 4)};
  }

  const View sect = hdr.with_code(ErrorCode::MalformedSectionTable);
  if (section_count > kMaxSections) {
    throw Error(ErrorCode::MalformedSectionTable, std::to_string(section_count) + " sections exceeds format limit");
  }
  const std::size_t table = opt + optional_size;
  sect.need(table, kSectionHeaderSize * section_count, "section table");
  for (std::size_t i = 0; i < section_count; ++i) {
    const std::size_t s = table + kSectionHeaderSize * i;
    std::string name;
    for (std::size_t k = 0; k < 8 && image[s + k] != 0; ++k) {
      const std::uint8_t c = image[s + k];
      name.push_back(c >= 0x20 && c < 0x7F ? static_cast<char>(c) : '?');
    }
    const RawSection raw{sect.u32(s + 8), sect.u32(s + 12), sect.u32(s + 16), sect.u32(s + 20)};
    layout.sections.push_back(raw);
    out.sections.push_back(PeSection{std::move(name), raw.virtual_size, raw.raw_size, sect.u32(s + 36)});
  }
  out.section_count = section_count;

  const View dirs = hdr.with_code(ErrorCode::BadDataDirectory);
  try {
    parse_imports(layout, dirs, options, out, result.warnings);
  } catch (const Error& e) {
    out.import_count = 0;
    out.import_names.clear();
    result.warnings.push_back(std::string("import directory: ") + e.what());
  }
  try {
    parse_exports(layout, dirs, options, out, result.warnings);
  } catch (const Error& e) {
    out.export_count = 0;
    out.export_names.clear();
    out.export_module_name.clear();
    result.warnings.push_back(std::string("export directory: ") + e.what());
  }
  try {
    parse_debug(layout, dirs, out);
  } catch (const Error& e) {
    out.pdb_path.clear();
    result.warnings.push_back(std::string("debug directory: ") + e.what());
  }

  // The security directory holds a file offset, not an RVA; presence is enough.
  out.is_signed = layout.directories[kSecurity].first != 0 && layout.directories[kSecurity].second != 0;
  out.file_size = static_cast<std::int64_t>(image.size());
  out.entropy_bits = shannon_entropy(image);
  return result;
}

}  // namespace memlog
