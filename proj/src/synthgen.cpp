#include "memlog/synthgen.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "memlog/binio.hpp"
#include "memlog/error.hpp"

namespace memlog {

namespace {

constexpr std::size_t kIndicatorPool = 12;
constexpr std::int64_t kEpochBaseMs = 1'546'300'800'000;  // 2019-01-01
constexpr std::int64_t kYearMs = 365LL * 24 * 3600 * 1000;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Where an indicator slot draws from. Malicious logs use their family's pool,
// benign logs the benign pool; either may be replaced by the shared pool.
struct Source {
  bool shared;
  bool malicious;
  std::size_t family;
};

std::string pool_tag(const Source& s) {
  if (s.shared) return "cmn";
  if (s.malicious) return "fam" + std::to_string(s.family);
  return "ben";
}

// Stable small integer per pool so byte and address indicators differ by pool.
std::uint32_t pool_code(const Source& s) {
  if (s.shared) return 1;
  if (s.malicious) return 16 + static_cast<std::uint32_t>(s.family);
  return 2;
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string hex_digits(std::mt19937_64& rng, std::size_t n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(n, '0');
  for (auto& c : s) c = kDigits[rng() & 0xF];
  return s;
}

class Generator {
 public:
  Generator(const GenSpec& spec, std::size_t index)
      : spec_(spec), rng_(splitmix64(spec.seed ^ splitmix64(index + 1))), malicious_(index < spec.n_malicious) {
    family_ = pick(spec.heterogeneity.n_malware_families);
  }

  CanonicalLog run() {
    CanonicalLog log;
    log.label = malicious_ ? Label::Malicious : Label::Benign;
    fill_anonymized(log.anonymized);
    fill_metadata(log.metadata);
    fill_runtime(log.runtime, log.metadata);
    if (chance(0.8)) log.pe = make_pe();
    return log;
  }

 private:
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
  }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

  Source slot() {
    const bool shared = std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < spec_.overlap;
    return {shared, malicious_, family_};
  }
  std::size_t slot_item() { return pick(kIndicatorPool); }

  std::string exe_name() { return "app" + std::to_string(pick(spec_.heterogeneity.n_exe_names)) + ".exe"; }
  std::string module_path() {
    return "C:\\Windows\\System32\\sys" + std::to_string(pick(spec_.heterogeneity.n_module_pool)) + ".dll";
  }
  std::string sha256() { return hex_digits(rng_, 64); }

  ResourceEntry resource(std::string path) {
    ResourceEntry r;
    r.path = std::move(path);
    r.size = between(0, 1 << 24);
    r.hash = sha256();
    r.created = kEpochBaseMs + between(0, kYearMs);
    r.modified = *r.created + between(0, kYearMs);
    return r;
  }

  ModuleEntry module(std::string path) {
    ModuleEntry m;
    const std::uint64_t base = 0x7ff000000000ULL + (static_cast<std::uint64_t>(between(0, 0xFFFFF)) << 16);
    const std::int64_t size = between(1, 256) * 0x1000;
    m.base = hex(base);
    m.end = hex(base + static_cast<std::uint64_t>(size));
    m.size = size;
    m.link_meta = chance(0.5) ? "static" : "dynamic";
    m.path = std::move(path);
    return m;
  }

  // Four-byte word from an indicator pool, as raw bytes.
  void indicator_word(Bytes& out) {
    const Source s = slot();
    const std::uint32_t word = (pool_code(s) << 24) | (static_cast<std::uint32_t>(slot_item()) << 16) | 0x9090;
    for (int k = 3; k >= 0; --k) out.push_back(static_cast<std::uint8_t>(word >> (8 * k)));
  }

  void fill_anonymized(AnonymizedBlock& a) {
    a.username = "user" + std::to_string(pick(500));
    a.domain_name = "corp" + std::to_string(pick(20)) + ".local";
    a.machine_name = "WS-" + std::to_string(pick(2000));
    a.ip_address = "10." + std::to_string(pick(256)) + "." + std::to_string(pick(256)) + "." + std::to_string(pick(256));
    a.serial_number = hex_digits(rng_, 12);
  }

  void fill_metadata(MetadataBlock& m) {
    static constexpr const char* kZones[] = {"UTC", "UTC+01:00", "UTC-05:00", "UTC+08:00"};
    m.timestamp = kEpochBaseMs + between(0, kYearMs);
    const std::size_t os = pick(spec_.heterogeneity.n_os_versions);
    m.os_name = os % 2 == 0 ? "Windows 10 Pro" : "Windows 11 Enterprise";
    m.os_build = "10.0." + std::to_string(19041 + os * 100);
    m.exe_name = exe_name();
    m.exe_path = "C:\\Program Files\\Vendor\\" + m.exe_name;
    m.exe_hash = sha256();
    m.file_created = *m.timestamp - between(kYearMs / 12, kYearMs);
    m.file_modified = *m.file_created + between(0, kYearMs / 12);
    if (chance(0.3)) m.referral_url = "https://download" + std::to_string(pick(10)) + ".example.com/setup";
    m.user_login_time = *m.timestamp - between(0, 86'400'000);
    m.thread_count = between(1, 64);
    m.integrity_level = static_cast<IntegrityLevel>(pick(5));
    m.exe_arch = chance(0.7) ? Arch::X64 : Arch::X86;
    m.work_cycles = between(0, 1LL << 40);
    m.kernel_time_ms = between(0, 100'000);
    m.process_id = between(4, 65'535);
    m.thread_id = between(4, 65'535);
    m.privilege_level = static_cast<PrivilegeLevel>(pick(3));
    m.timezone = kZones[pick(4)];
  }

  void fill_runtime(RuntimeBlock& r, const MetadataBlock& m) {
    static constexpr const char* kRegs[] = {"rax", "rbx", "rcx", "rdx", "rsi", "rdi", "rsp", "rip"};
    r.base_address = hex(0x140000000ULL + (static_cast<std::uint64_t>(pick(64)) << 16));

    std::string cmd = "\"" + m.exe_path + "\"";
    for (int i = 0; i < 3; ++i) {
      const Source s = slot();
      cmd += " --" + pool_tag(s) + "-opt" + std::to_string(slot_item());
    }
    r.command_line = cmd;

    // Four registers carry indicator pages, the rest land on shared pages.
    for (std::size_t i = 0; i < 8; ++i) {
      std::uint64_t page;
      if (i < 4) {
        const Source s = slot();
        page = (static_cast<std::uint64_t>(pool_code(s)) << 32) | (static_cast<std::uint64_t>(slot_item()) << 12);
      } else {
        page = 0x7ff600000000ULL | (static_cast<std::uint64_t>(pick(50)) << 12);
      }
      r.registers[kRegs[i]] = hex(page | static_cast<std::uint64_t>(between(0, 0xFFF)));
    }
    for (const char* reg : {"rip", "rsp"}) {
      Bytes b;
      for (int w = 0; w < 4; ++w) indicator_word(b);
      r.register_snippets[reg] = std::move(b);
    }
    r.eflags = hex(0x200 | static_cast<std::uint64_t>(pick(4)) << 6);
    if (chance(0.5)) r.signature = "sig-" + hex_digits(rng_, 8);

    for (int i = 0; i < 3; ++i) r.loaded_resources.push_back(resource("C:\\ProgramData\\res" + std::to_string(pick(30)) + ".dat"));
    r.vmem_free = between(1LL << 30, 1LL << 40);
    r.vmem_used = between(1LL << 20, 1LL << 34);
    for (int i = 0; i < 2; ++i) {
      const Source s = slot();
      r.hklm_run_entries.push_back("Software\\Microsoft\\Windows\\CurrentVersion\\Run\\" + pool_tag(s) + "Svc" +
                                   std::to_string(slot_item()) + "=C:\\bin\\" + pool_tag(s) + ".exe");
    }
    r.dep_enabled = chance(0.8);
    for (std::size_t i = 0, n = 1 + pick(2); i < n; ++i) {
      IllegalAccess a;
      a.address = hex(0x10000ULL + (static_cast<std::uint64_t>(pick(4096)) << 4));
      indicator_word(a.bytes);
      indicator_word(a.bytes);
      r.illegal_accesses.push_back(std::move(a));
    }
    r.import_table_hash = hex_digits(rng_, 32);
    if (chance(0.25)) {
      Injector inj;
      inj.pid = between(4, 65'535);
      inj.ppid = between(4, 65'535);
      inj.hash = sha256();
      inj.path = "C:\\Windows\\" + exe_name();
      r.injector = std::move(inj);
    }
    r.auto_elevate = chance(0.1);

    for (int i = 0; i < 4; ++i) {
      const Source s = slot();
      r.loaded_modules.push_back(
          module("C:\\Users\\Public\\lib" + pool_tag(s) + "_" + std::to_string(slot_item()) + ".dll"));
    }
    for (int i = 0; i < 4; ++i) r.loaded_modules.push_back(module(module_path()));

    for (int i = 0; i < 2; ++i) {
      const Source s = slot();
      r.opened_resources.push_back(resource("C:\\Users\\Public\\" + pool_tag(s) + "_doc" + std::to_string(slot_item()) + ".bin"));
    }

    ProcessDescriptor parent;
    parent.pid = between(4, 65'535);
    parent.path = "C:\\Windows\\" + (chance(0.5) ? std::string("explorer.exe") : exe_name());
    parent.hash = sha256();
    parent.created = kEpochBaseMs + between(0, kYearMs);
    parent.modified = *parent.created;
    parent.command_line = parent.path;
    parent.integrity_level = static_cast<IntegrityLevel>(pick(5));
    parent.loaded_modules.push_back(module(module_path()));
    r.parent_process = std::move(parent);

    for (int i = 0; i < 2; ++i) r.process_blocks.push_back("block" + std::to_string(pick(16)));
    for (int i = 0; i < 8; ++i) {
      const auto w = static_cast<std::uint32_t>(0xCC000000u | pick(64));
      for (int k = 3; k >= 0; --k) r.stack_snapshot.push_back(static_cast<std::uint8_t>(w >> (8 * k)));
    }
    for (int i = 0; i < 6; ++i) {
      const Source s = slot();
      const std::size_t item = slot_item();
      r.stack_trace.push_back(pool_tag(s) + "core.dll!Routine" + std::to_string(item) + "+0x" + std::to_string(item * 16 + 32));
    }
    r.stack_trace.push_back("ntdll.dll!RtlUserThreadStart");

    static constexpr const char* kMagic[] = {"pe", "zip", "pdf", "png", "elf"};
    for (std::size_t i = 0, n = pick(3); i < n; ++i) r.embedded_files.push_back({kMagic[pick(5)], between(0, 1 << 20)});
    {
      const Source s = slot();
      r.found_urls.push_back("http://" + pool_tag(s) + std::to_string(slot_item()) + ".example.net/gate");
    }
    {
      const Source s = slot();
      r.found_ips.push_back("192.0." + std::to_string(pool_code(s)) + "." + std::to_string(slot_item()));
    }
    {
      const Source s = slot();
      r.scheduled_tasks.push_back("\\Tasks\\" + pool_tag(s) + "Update" + std::to_string(slot_item()));
    }
    for (std::size_t i = 0, n = pick(3); i < n; ++i) {
      r.registry_attempts.push_back({"HKCU\\Software\\Key" + std::to_string(pick(40)), chance(0.5) ? "ok" : "denied"});
    }
  }

  PeBlock make_pe() {
    static constexpr const char* kSections[] = {".text", ".rdata", ".data", ".rsrc", ".reloc", ".pdata"};
    PeBlock pe;
    const bool wide = chance(0.7);
    pe.pe_type = wide ? PeType::PE32Plus : PeType::PE32;
    pe.arch = wide ? Arch::X64 : Arch::X86;
    const auto n_sections = static_cast<std::size_t>(between(3, 6));
    pe.section_count = static_cast<std::int64_t>(n_sections);
    for (std::size_t i = 0; i < n_sections; ++i) {
      const std::int64_t raw = between(1, 512) * 0x200;
      pe.sections.push_back({kSections[i], raw + between(0, 0x1FF), raw, 0x40000040});
    }
    for (std::size_t i = 0, n = 2 + pick(6); i < n; ++i) {
      pe.import_names.push_back("kernel32.dll!Func" + std::to_string(pick(100)));
    }
    pe.import_count = static_cast<std::int64_t>(pe.import_names.size());
    if (chance(0.2)) {
      pe.export_module_name = "lib" + std::to_string(pick(20)) + ".dll";
      pe.export_names = {"Init", "Run"};
    }
    pe.export_count = static_cast<std::int64_t>(pe.export_names.size());
    pe.characteristics = wide ? 0x22 : 0x102;
    pe.compile_timestamp = 1'400'000'000 + between(0, 200'000'000);
    pe.is_signed = chance(0.5);
    pe.entry_point_rva = 0x1000 + between(0, 0x40) * 0x100;
    pe.entropy_bits = std::round(std::uniform_real_distribution<double>(4.0, 7.9)(rng_) * 1000.0) / 1000.0;
    pe.file_size = between(1, 4096) * 0x400;
    if (chance(0.5)) pe.pdb_path = "C:\\build\\out\\proj" + std::to_string(pick(30)) + ".pdb";
    pe.created = kEpochBaseMs + between(0, kYearMs);
    pe.modified = *pe.created + between(0, kYearMs);
    return pe;
  }

  const GenSpec& spec_;
  std::mt19937_64 rng_;
  bool malicious_;
  std::size_t family_ = 0;
};

}  // namespace

void validate(const GenSpec& spec) {
  if (!(spec.overlap >= 0.0 && spec.overlap <= 1.0)) throw Error(ErrorCode::InvalidSpec, "overlap must be in [0,1]");
  const auto& h = spec.heterogeneity;
  if (h.n_os_versions < 1 || h.n_exe_names < 1 || h.n_module_pool < 1 || h.n_malware_families < 1) {
    throw Error(ErrorCode::InvalidSpec, "heterogeneity pool sizes must be >= 1");
  }
}

CanonicalLog generate_log(const GenSpec& spec, std::size_t index) {
  validate(spec);
  if (index >= spec.n_malicious + spec.n_benign) throw Error(ErrorCode::InvalidSpec, "log index past corpus end");
  return Generator(spec, index).run();
}

std::vector<CanonicalLog> generate_corpus(const GenSpec& spec) {
  validate(spec);
  std::vector<CanonicalLog> out;
  out.reserve(spec.n_malicious + spec.n_benign);
  for (std::size_t i = 0; i < spec.n_malicious + spec.n_benign; ++i) out.push_back(Generator(spec, i).run());
  return out;
}

void write_corpus(std::span<const CanonicalLog> logs, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  std::string manifest = "file,label\n";
  char name[32];
  for (std::size_t i = 0; i < logs.size(); ++i) {
    std::snprintf(name, sizeof name, "log_%06zu.json", i);
    binio::write_text_file(dir / name, serialize_log(logs[i]));
    manifest += name;
    manifest += ',';
    manifest += logs[i].label ? to_string(*logs[i].label) : "";
    manifest += '\n';
  }
  binio::write_text_file(dir / "labels.csv", manifest);
}

}  // namespace memlog
