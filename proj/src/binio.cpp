#include "memlog/binio.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "memlog/error.hpp"

namespace memlog::binio {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& buf, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

template <typename T>
T get_le(std::span<const std::uint8_t> b) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(b[i]) << (8 * i);
  }
  return v;
}

}  // namespace

void Writer::bytes(std::span<const std::uint8_t> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }

void Writer::magic(std::string_view tag) {
  for (char c : tag) buf_.push_back(static_cast<std::uint8_t>(c));
}

void Writer::u8(std::uint8_t v) { buf_.push_back(v); }
void Writer::u32(std::uint32_t v) { put_le(buf_, v); }
void Writer::u64(std::uint64_t v) { put_le(buf_, v); }
void Writer::f32(float v) { put_le(buf_, std::bit_cast<std::uint32_t>(v)); }
void Writer::f64(double v) { put_le(buf_, std::bit_cast<std::uint64_t>(v)); }

void Writer::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  for (char c : s) buf_.push_back(static_cast<std::uint8_t>(c));
}

std::span<const std::uint8_t> Reader::bytes(std::size_t n) {
  if (n > remaining()) {
    throw Error(ErrorCode::CorruptPayload, "unexpected end of payload at offset " + std::to_string(pos_));
  }
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t Reader::u8() { return bytes(1)[0]; }
std::uint32_t Reader::u32() { return get_le<std::uint32_t>(bytes(4)); }
std::uint64_t Reader::u64() { return get_le<std::uint64_t>(bytes(8)); }
float Reader::f32() { return std::bit_cast<float>(u32()); }
double Reader::f64() { return std::bit_cast<double>(u64()); }

std::string Reader::str(std::size_t max_len) {
  const std::uint32_t n = u32();
  if (n > max_len) throw Error(ErrorCode::CorruptPayload, "string length " + std::to_string(n) + " exceeds limit");
  auto b = bytes(n);
  return std::string(b.begin(), b.end());
}

void expect_header(Reader& r, std::string_view magic, std::uint32_t version) {
  if (r.remaining() < magic.size() ||
      std::memcmp(r.bytes(magic.size()).data(), magic.data(), magic.size()) != 0) {
    throw Error(ErrorCode::BadMagic, "expected magic '" + std::string(magic) + "'");
  }
  const std::uint32_t got = r.u32();
  if (got != version) {
    throw Error(ErrorCode::VersionMismatch,
                "file version " + std::to_string(got) + ", supported " + std::to_string(version));
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::Io, "read failed: " + path.string());
  return data;
}

std::string read_text_file(const std::filesystem::path& path) {
  auto data = read_file(path);
  return std::string(data.begin(), data.end());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace memlog::binio
