#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace benchalign {

/// Shortest round-trip decimal form of a double (std::to_chars), so written
/// files are byte-stable and re-loading reproduces the exact value.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string csv_quote(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

/// Minimal RFC-4180-ish reader: comma separators, double-quote escaping,
/// LF or CRLF line endings. Quoted fields may not span lines (no field in the
/// file formats used here contains a newline).
class CsvReader {
 public:
  CsvReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw std::runtime_error(path + ": cannot open file");
  }

  const std::string& path() const { return path_; }
  std::size_t line_number() const { return line_no_; }

  /// Reads the next row into `fields`; returns false at end of file.
  /// Blank lines are skipped.
  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      split(line, fields);
      return true;
    }
    return false;
  }

  /// Reads the header row and checks it matches `expected` exactly.
  void expect_header(const std::vector<std::string>& expected) {
    std::vector<std::string> fields;
    if (!next(fields)) throw error("missing header row");
    if (fields != expected) {
      std::ostringstream os;
      os << "bad header, expected ";
      for (std::size_t i = 0; i < expected.size(); ++i) os << (i ? "," : "") << expected[i];
      throw error(os.str());
    }
  }

  std::runtime_error error(const std::string& what) const {
    return std::runtime_error(path_ + ":" + std::to_string(line_no_) + ": " + what);
  }

 private:
  void split(const std::string& line, std::vector<std::string>& fields) const {
    fields.clear();
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            cur += '"';
            ++i;
          } else {
            quoted = false;
          }
        } else {
          cur += c;
        }
      } else if (c == '"' && cur.empty()) {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (quoted) throw error("unterminated quoted field");
    fields.push_back(std::move(cur));
  }

  std::string path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

inline double parse_double(const CsvReader& r, const std::string& field,
                           const std::string& what) {
  double v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw r.error(what + ": not a number: '" + field + "'");
  }
  return v;
}

inline std::uint64_t parse_u64(const CsvReader& r, const std::string& field,
                               const std::string& what) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw r.error(what + ": not a nonnegative integer: '" + field + "'");
  }
  return v;
}

inline std::int64_t parse_i64(const CsvReader& r, const std::string& field,
                              const std::string& what) {
  std::int64_t v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw r.error(what + ": not an integer: '" + field + "'");
  }
  return v;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  return out;
}

}  // namespace benchalign
