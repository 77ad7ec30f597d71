#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rxn {

std::vector<std::string_view> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);
// Lines with trailing '\r' removed; a final empty line is dropped.
std::vector<std::string_view> lines(std::string_view text);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Shortest decimal that round-trips through a double.
std::string format_real(double x);
double parse_real(std::string_view s);  // throws MalformedLine
long long parse_int(std::string_view s);

// Little-endian byte packing shared by the binary formats.
class ByteWriter {
 public:
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  void bytes(std::string_view s);
  void str(std::string_view s);  // u32 length prefix
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::string_view bytes(std::size_t n);
  std::string str();
  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace rxn
