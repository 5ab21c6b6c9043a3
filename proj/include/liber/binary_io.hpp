#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace liber {

// Little-endian encoder used by every on-disk format in the project.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void raw(std::string_view s);
  // u32 length followed by the bytes.
  void str(std::string_view s);
  void f64s(std::span<const double> values);

  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

// Bounds-checked decoder. Throws DataError on truncated input.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string raw(std::size_t n);
  std::string str();
  void f64s(std::span<double> out);

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void write_matrix_row_major(ByteWriter& w, const Eigen::MatrixXd& m);
void read_matrix_row_major(ByteReader& r, Eigen::MatrixXd& m);
void write_matrix_col_major(ByteWriter& w, const Eigen::MatrixXd& m);
void read_matrix_col_major(ByteReader& r, Eigen::MatrixXd& m);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace liber
