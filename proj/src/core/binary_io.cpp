#include "zsl/core/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "zsl/error.hpp"

namespace zsl {

namespace {

template <typename T>
void put_le(std::string& buf, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<char>(static_cast<std::uint8_t>(v >> (8 * i))));
  }
}

template <typename T>
T get_le(std::string_view raw) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<std::uint8_t>(raw[i])) << (8 * i);
  }
  return v;
}

// Caps a declared element count at what the remaining payload can hold, so a
// corrupt length field cannot trigger a huge allocation.
void check_count(std::uint64_t count, std::size_t elem_size, std::size_t remaining) {
  if (count > remaining / elem_size) {
    throw FormatError("declared array length " + std::to_string(count) +
                      " exceeds remaining payload");
  }
}

}  // namespace

void BinaryWriter::bytes(std::string_view raw) { buf_.append(raw); }
void BinaryWriter::u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
void BinaryWriter::u32(std::uint32_t v) { put_le(buf_, v); }
void BinaryWriter::u64(std::uint64_t v) { put_le(buf_, v); }
void BinaryWriter::f64(double v) { put_le(buf_, std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  buf_.append(s);
}

void BinaryWriter::f64_array(std::span<const double> values) {
  u64(values.size());
  for (double v : values) f64(v);
}

std::string_view BinaryReader::bytes(std::size_t n) {
  if (n > remaining()) {
    throw FormatError("unexpected end of data: need " + std::to_string(n) + " bytes, " +
                      std::to_string(remaining()) + " left");
  }
  auto out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t BinaryReader::u8() { return static_cast<std::uint8_t>(bytes(1)[0]); }
std::uint32_t BinaryReader::u32() { return get_le<std::uint32_t>(bytes(4)); }
std::uint64_t BinaryReader::u64() { return get_le<std::uint64_t>(bytes(8)); }
double BinaryReader::f64() { return std::bit_cast<double>(get_le<std::uint64_t>(bytes(8))); }

std::string BinaryReader::str() {
  const std::uint32_t n = u32();
  return std::string(bytes(n));
}

std::vector<double> BinaryReader::f64_array() {
  const std::uint64_t n = u64();
  check_count(n, 8, remaining());
  std::vector<double> out(n);
  for (auto& v : out) v = f64();
  return out;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace zsl
