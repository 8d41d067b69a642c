#pragma once

// File helpers shared by every on-disk format: strict field parsing,
// fixed-precision number printing, and the little-endian binary matrix block.

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "prex/common.hpp"

namespace prex::io {

inline std::ifstream open_input(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::in | std::ios::binary : std::ios::in);
  if (!in) fail(ErrorKind::kMissingFile, "cannot open '" + path + "'");
  return in;
}

inline std::ofstream open_output(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::out | std::ios::binary | std::ios::trunc
                                 : std::ios::out | std::ios::trunc);
  if (!out) fail(ErrorKind::kMissingFile, "cannot write '" + path + "'");
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in = open_input(path, true);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

/// Splits on runs of spaces/tabs, dropping empty fields.
inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t k = 0;
  while (k < line.size()) {
    while (k < line.size() && (line[k] == ' ' || line[k] == '\t')) ++k;
    const std::size_t start = k;
    while (k < line.size() && line[k] != ' ' && line[k] != '\t') ++k;
    if (k > start) fields.push_back(line.substr(start, k - start));
  }
  return fields;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline std::string where(const std::string& path, std::size_t line_no) {
  return path + ":" + std::to_string(line_no);
}

template <typename Int>
bool try_parse_int(std::string_view text, Int& out) {
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

template <typename Int>
Int parse_int(std::string_view text, const std::string& context) {
  Int value{};
  if (!try_parse_int(text, value)) {
    fail(ErrorKind::kFormat, context + ": expected integer, got '" + std::string(text) + "'");
  }
  return value;
}

inline double parse_double(std::string_view text, const std::string& context) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    fail(ErrorKind::kFormat, context + ": expected number, got '" + std::string(text) + "'");
  }
  return value;
}

/// Fixed notation with 9 decimal digits, the precision of every text format.
inline void append_fixed9(std::string& out, double value) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof buf, "%.9f", value);
  // "-0.000000000" prints differently from "0.000000000" and would break
  // write-read-write stability; normalize it.
  if (std::strcmp(buf, "-0.000000000") == 0) {
    out += "0.000000000";
    return;
  }
  out.append(buf, static_cast<std::size_t>(n));
}

inline std::string fixed9(double value) {
  std::string s;
  append_fixed9(s, value);
  return s;
}

// ---- little-endian binary primitives ----

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

inline void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int k = 0; k < 8; ++k) buf[k] = static_cast<unsigned char>(v >> (8 * k));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

inline std::uint64_t read_u64(std::istream& in, const std::string& context) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) fail(ErrorKind::kFormat, context + ": truncated");
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | buf[k];
  return v;
}

inline void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline double read_f64(std::istream& in, const std::string& context) {
  return std::bit_cast<double>(read_u64(in, context));
}

inline constexpr char kMagic[4] = {'P', 'R', 'E', 'X'};
inline constexpr unsigned char kBinaryVersion = 1;

/// Binary matrix block: "PREX", version byte, rows and cols as u64 LE,
/// then row-major f64 LE.
inline void write_matrix_binary(std::ostream& out, const Matrix& m) {
  out.write(kMagic, 4);
  out.put(static_cast<char>(kBinaryVersion));
  write_u64(out, m.rows());
  write_u64(out, m.cols());
  for (double v : m.data()) write_f64(out, v);
}

inline Matrix read_matrix_binary(std::istream& in, const std::string& context) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    fail(ErrorKind::kFormat, context + ": bad magic (expected PREX)");
  }
  const int version = in.get();
  if (version != kBinaryVersion) {
    fail(ErrorKind::kFormat, context + ": unsupported binary version " + std::to_string(version));
  }
  const std::uint64_t rows = read_u64(in, context);
  const std::uint64_t cols = read_u64(in, context);
  if (cols != 0 && rows > (std::uint64_t{1} << 40) / cols) {
    fail(ErrorKind::kFormat, context + ": implausible matrix shape");
  }
  Matrix m(rows, cols);
  for (double& v : m.data()) v = read_f64(in, context);
  return m;
}

}  // namespace prex::io
