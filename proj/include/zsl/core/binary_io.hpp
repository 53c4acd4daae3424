#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace zsl {

/// Appends little-endian scalars to an in-memory buffer.
class BinaryWriter {
 public:
  void bytes(std::string_view raw);
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  /// u32 length prefix followed by the raw characters.
  void str(std::string_view s);
  /// u64 count followed by that many f64 values.
  void f64_array(std::span<const double> values);

  const std::string& buffer() const noexcept { return buf_; }

 private:
  std::string buf_;
};

/// Reads what BinaryWriter wrote. Every read past the end throws FormatError.
class BinaryReader {
 public:
  explicit BinaryReader(std::string_view data) : data_(data) {}

  std::string_view bytes(std::size_t n);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str();
  std::vector<double> f64_array();

  bool at_end() const noexcept { return pos_ == data_.size(); }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::string read_file_bytes(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partially written artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace zsl
