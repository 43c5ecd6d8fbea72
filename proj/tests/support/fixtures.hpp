#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "memlog/pe.hpp"

namespace memlog::testing {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "memlog-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Little-endian byte poking into a zero-filled image.
struct ImageWriter {
  std::vector<std::uint8_t> bytes;

  explicit ImageWriter(std::size_t size) : bytes(size, 0) {}
  void u16(std::size_t off, std::uint16_t v) {
    for (int i = 0; i < 2; ++i) bytes.at(off + i) = static_cast<std::uint8_t>(v >> (8 * i));
  }
  void u32(std::size_t off, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.at(off + i) = static_cast<std::uint8_t>(v >> (8 * i));
  }
  void u64(std::size_t off, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.at(off + i) = static_cast<std::uint8_t>(v >> (8 * i));
  }
  void str(std::size_t off, const std::string& s) {
    for (std::size_t i = 0; i < s.size(); ++i) bytes.at(off + i) = static_cast<std::uint8_t>(s[i]);
    bytes.at(off + s.size()) = 0;
  }
};

// A hand-assembled executable and the field values it was assembled with.
struct PeFixture {
  std::vector<std::uint8_t> image;
  PeBlock expected;  // entropy_bits left empty; computed separately
};

// Three sections (.text, .rdata, .data); .rdata holds imports from two DLLs
// (two by name, one by ordinal), an export table and a CodeView debug record.
// A 16-byte certificate blob is appended and referenced by the security directory.
inline PeFixture make_pe_fixture(bool pe32_plus) {
  constexpr std::size_t kNt = 0x80;
  constexpr std::uint32_t kTimestamp = 0x5F5E1000;
  constexpr std::uint32_t kRdataRva = 0x2000;
  constexpr std::size_t kRdataOff = 0x600;
  constexpr std::size_t kCertOff = 0xC00;
  ImageWriter w(kCertOff + 16);

  w.bytes[0] = 'M';
  w.bytes[1] = 'Z';
  w.u32(0x3C, kNt);
  w.u32(kNt, 0x00004550);
  const std::size_t coff = kNt + 4;
  const std::uint16_t opt_size = pe32_plus ? 240 : 224;
  const std::uint16_t characteristics = pe32_plus ? 0x0022 : 0x0102;
  w.u16(coff, pe32_plus ? 0x8664 : 0x014C);
  w.u16(coff + 2, 3);
  w.u32(coff + 4, kTimestamp);
  w.u16(coff + 16, opt_size);
  w.u16(coff + 18, characteristics);

  const std::size_t opt = coff + 20;
  w.u16(opt, pe32_plus ? 0x20B : 0x10B);
  w.u32(opt + 16, 0x1234);  // AddressOfEntryPoint
  w.u32(opt + 60, 0x400);   // SizeOfHeaders
  const std::size_t dirs = opt + (pe32_plus ? 112 : 96);
  w.u32(dirs - 4, 16);  // NumberOfRvaAndSizes
  auto dir = [&](std::size_t i, std::uint32_t rva, std::uint32_t size) {
    w.u32(dirs + 8 * i, rva);
    w.u32(dirs + 8 * i + 4, size);
  };
  dir(0, kRdataRva + 0x100, 40);   // export
  dir(1, kRdataRva + 0x000, 60);   // import
  dir(4, kCertOff, 16);            // security (file offset)
  dir(6, kRdataRva + 0x1C0, 28);   // debug

  struct Sec {
    const char* name;
    std::uint32_t vsize, va, raw_size, raw_ptr, chars;
  };
  const Sec secs[] = {{".text", 0x180, 0x1000, 0x200, 0x400, 0x60000020},
                      {".rdata", 0x300, kRdataRva, 0x400, kRdataOff, 0x40000040},
                      {".data", 0x80, 0x3000, 0x200, 0xA00, 0xC0000040}};
  const std::size_t table = opt + opt_size;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t s = table + 40 * i;
    std::memcpy(&w.bytes[s], secs[i].name, std::strlen(secs[i].name));
    w.u32(s + 8, secs[i].vsize);
    w.u32(s + 12, secs[i].va);
    w.u32(s + 16, secs[i].raw_size);
    w.u32(s + 20, secs[i].raw_ptr);
    w.u32(s + 36, secs[i].chars);
  }
  // Some code bytes so the image is not mostly zeros.
  for (std::size_t i = 0; i < 0x180; ++i) w.bytes[0x400 + i] = static_cast<std::uint8_t>((i * 37 + 11) & 0xFF);

  auto rd = [&](std::uint32_t rel) { return kRdataOff + rel; };
  const std::size_t thunk = pe32_plus ? 8 : 4;
  auto put_thunk = [&](std::size_t off, std::uint64_t v) {
    if (pe32_plus) w.u64(off, v);
    else w.u32(off, static_cast<std::uint32_t>(v));
  };
  // Import descriptors: KERNEL32.dll (ILT at 0x40), WS2_32.dll (ILT at 0x60).
  w.u32(rd(0x00), kRdataRva + 0x40);
  w.u32(rd(0x0C), kRdataRva + 0xC0);
  w.u32(rd(0x10), kRdataRva + 0x40);
  w.u32(rd(0x14), kRdataRva + 0x60);
  w.u32(rd(0x14 + 12), kRdataRva + 0xD0);
  w.u32(rd(0x14 + 16), kRdataRva + 0x60);
  put_thunk(rd(0x40), kRdataRva + 0x80);
  put_thunk(rd(0x40) + thunk, kRdataRva + 0xA0);
  put_thunk(rd(0x60), (pe32_plus ? (1ULL << 63) : 0x80000000ULL) | 17);
  w.str(rd(0x82), "CreateFileA");
  w.str(rd(0xA2), "ExitProcess");
  w.str(rd(0xC0), "KERNEL32.dll");
  w.str(rd(0xD0), "WS2_32.dll");
  // Export directory: 3 functions, 2 named.
  w.u32(rd(0x100 + 12), kRdataRva + 0x180);
  w.u32(rd(0x100 + 20), 3);
  w.u32(rd(0x100 + 24), 2);
  w.u32(rd(0x100 + 28), kRdataRva + 0x160);
  w.u32(rd(0x100 + 32), kRdataRva + 0x140);
  w.u32(rd(0x140), kRdataRva + 0x190);
  w.u32(rd(0x144), kRdataRva + 0x198);
  w.str(rd(0x180), "fixture.dll");
  w.str(rd(0x190), "alpha");
  w.str(rd(0x198), "beta");
  // Debug directory entry pointing at an RSDS record.
  const std::string pdb = "C:\\build\\fixture.pdb";
  w.u32(rd(0x1C0 + 12), 2);
  w.u32(rd(0x1C0 + 16), static_cast<std::uint32_t>(24 + pdb.size() + 1));
  w.u32(rd(0x1C0 + 20), kRdataRva + 0x200);
  w.u32(rd(0x1C0 + 24), static_cast<std::uint32_t>(rd(0x200)));
  w.u32(rd(0x200), 0x53445352);
  for (int i = 0; i < 16; ++i) w.bytes[rd(0x204) + i] = static_cast<std::uint8_t>(0xA0 + i);
  w.u32(rd(0x214), 1);
  w.str(rd(0x218), pdb);
  for (std::size_t i = 0; i < 16; ++i) w.bytes[kCertOff + i] = static_cast<std::uint8_t>(0x30 + i);

  PeFixture f;
  f.image = std::move(w.bytes);
  PeBlock& e = f.expected;
  e.pe_type = pe32_plus ? PeType::PE32Plus : PeType::PE32;
  e.arch = pe32_plus ? Arch::X64 : Arch::X86;
  e.section_count = 3;
  for (const auto& s : secs) e.sections.push_back({s.name, s.vsize, s.raw_size, s.chars});
  e.import_count = 3;
  e.import_names = {"KERNEL32.dll!CreateFileA", "KERNEL32.dll!ExitProcess", "WS2_32.dll!#17"};
  e.export_count = 3;
  e.export_names = {"alpha", "beta"};
  e.export_module_name = "fixture.dll";
  e.characteristics = characteristics;
  e.compile_timestamp = kTimestamp;
  e.is_signed = true;
  e.entry_point_rva = 0x1234;
  e.file_size = static_cast<std::int64_t>(f.image.size());
  e.pdb_path = pdb;
  return f;
}

}  // namespace memlog::testing
