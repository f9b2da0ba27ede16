#pragma once

// Matrix containers on disk.
//
//   text:   "d <rows> <cols>\n" followed by whitespace-separated row-major entries
//   binary: "RAYQ1", u64 rows, u64 cols (little endian), rows*cols f64 entries
//
// A pair file is two binary containers back to back (A, then B).

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>

#include "rayq/linalg.hpp"

namespace rayq::io {

inline constexpr std::array<char, 5> kMagic{'R', 'A', 'Y', 'Q', '1'};

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double x) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

namespace detail {

inline void check_finite(const Matrix& m) {
  if (!m.allFinite()) raise(ErrorCode::InvalidArgument, "matrix has non-finite entries");
}

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  os.write(bytes.data(), 8);
}

template <class T>
T get_le(std::istream& is) {
  std::array<unsigned char, 8> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), 8)) raise(ErrorCode::Io, "truncated binary matrix");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, 8);
  return value;
}

}  // namespace detail

inline void write_text(std::ostream& os, const Matrix& m) {
  detail::check_finite(m);
  os << "d " << m.rows() << ' ' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

inline Matrix read_text(std::istream& is) {
  std::string tag;
  long long rows = 0, cols = 0;
  if (!(is >> tag >> rows >> cols) || tag != "d") raise(ErrorCode::Io, "bad text matrix header");
  if (rows < 1 || cols < 1) raise(ErrorCode::Io, "matrix dimensions must be positive");
  Matrix m(rows, cols);
  std::string tok;
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      if (!(is >> tok)) raise(ErrorCode::Io, "text matrix ends early");
      double x = 0.0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        raise(ErrorCode::Io, "bad matrix entry '" + tok + "'");
      m(i, j) = x;
    }
  detail::check_finite(m);
  return m;
}

inline void write_binary(std::ostream& os, const Matrix& m) {
  detail::check_finite(m);
  os.write(kMagic.data(), kMagic.size());
  detail::put_le(os, static_cast<std::uint64_t>(m.rows()));
  detail::put_le(os, static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) detail::put_le(os, m(i, j));
  if (!os) raise(ErrorCode::Io, "failed writing binary matrix");
}

inline Matrix read_binary(std::istream& is) {
  std::array<char, 5> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) raise(ErrorCode::Io, "missing RAYQ1 magic");
  const auto rows = detail::get_le<std::uint64_t>(is);
  const auto cols = detail::get_le<std::uint64_t>(is);
  if (rows < 1 || cols < 1 || rows > (1u << 20) || cols > (1u << 20))
    raise(ErrorCode::Io, "implausible binary matrix dimensions");
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = detail::get_le<double>(is);
  detail::check_finite(m);
  return m;
}

inline void save_pair(const std::string& path, const Matrix& a, const Matrix& b) {
  std::ofstream os(path, std::ios::binary);
  if (!os) raise(ErrorCode::Io, "cannot open '" + path + "' for writing");
  write_binary(os, a);
  write_binary(os, b);
}

inline std::pair<Matrix, Matrix> load_pair(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(ErrorCode::Io, "cannot open '" + path + "'");
  Matrix a = read_binary(is);
  Matrix b = read_binary(is);
  return {std::move(a), std::move(b)};
}

/// Reads either container, sniffing the magic bytes.
inline Matrix load_matrix(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(ErrorCode::Io, "cannot open '" + path + "'");
  std::array<char, 5> head{};
  is.read(head.data(), head.size());
  is.clear();
  is.seekg(0);
  return head == kMagic ? read_binary(is) : read_text(is);
}

}  // namespace rayq::io
