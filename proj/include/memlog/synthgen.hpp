#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "memlog/logmodel.hpp"

namespace memlog {

struct Heterogeneity {
  std::size_t n_os_versions = 8;
  std::size_t n_exe_names = 40;
  std::size_t n_module_pool = 60;
  std::size_t n_malware_families = 6;
};

struct GenSpec {
  std::size_t n_malicious = 0;
  std::size_t n_benign = 0;
  // Probability that an indicator slot draws from the pool shared by both
  // classes instead of the class (or family) pool. 1.0 makes the classes
  // indistinguishable.
  double overlap = 0.0;
  std::uint64_t seed = 0;
  Heterogeneity heterogeneity;
};

// Throws InvalidSpec.
void validate(const GenSpec& spec);

// n_malicious malicious logs followed by n_benign benign ones. Log i depends
// only on (spec, i), so any slice can be regenerated on its own.
std::vector<CanonicalLog> generate_corpus(const GenSpec& spec);
CanonicalLog generate_log(const GenSpec& spec, std::size_t index);

// Writes <dir>/log_NNNNNN.json (canonical JSON) plus <dir>/labels.csv.
void write_corpus(std::span<const CanonicalLog> logs, const std::filesystem::path& dir);

}  // namespace memlog
