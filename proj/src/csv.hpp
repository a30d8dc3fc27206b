#pragma once

// Minimal CSV plumbing shared by the loaders and writers. Fields never contain
// commas or quotes in any format this project reads or writes.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "htsf/error.hpp"

namespace htsf::detail {

inline std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

// Reads rows of a headed CSV file and returns the requested columns, in the
// requested order, whatever their position in the file.
class CsvReader {
 public:
  CsvReader(const std::filesystem::path& path, std::vector<std::string> columns)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw UserError("cannot open " + path.string());
    std::string header;
    if (!std::getline(in_, header)) throw UserError(path.string() + ": empty file");
    strip_cr(header);
    const std::vector<std::string> names = split_fields(header);
    width_ = names.size();
    for (const std::string& col : columns) {
      std::size_t pos = 0;
      while (pos < names.size() && names[pos] != col) ++pos;
      if (pos == names.size()) throw UserError(path.string() + ": missing column '" + col + "'");
      positions_.push_back(pos);
    }
  }

  std::optional<std::vector<std::string>> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      strip_cr(line);
      if (line.empty()) continue;
      const std::vector<std::string> fields = split_fields(line);
      if (fields.size() != width_) {
        throw UserError(location() + ": expected " + std::to_string(width_) + " fields, got " +
                        std::to_string(fields.size()));
      }
      std::vector<std::string> out;
      out.reserve(positions_.size());
      for (std::size_t p : positions_) out.push_back(fields[p]);
      return out;
    }
    return std::nullopt;
  }

  std::string location() const { return path_.string() + ":" + std::to_string(line_no_ + 1); }

 private:
  static void strip_cr(std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  }

  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t width_ = 0;
  std::vector<std::size_t> positions_;
  std::size_t line_no_ = 1;
};

inline std::optional<double> parse_double(std::string_view s) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

inline std::optional<long long> parse_int(std::string_view s) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

// Shortest representation that round-trips to the same double.
inline std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace htsf::detail
