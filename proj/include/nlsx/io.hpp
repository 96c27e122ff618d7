#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlsx/errors.hpp"

namespace nlsx {

using json = nlohmann::json;

// Doubles cross file formats as 17-significant-digit decimal strings so that
// parsing returns the identical bit pattern.
inline std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& s) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw ConfigError("not a number: '" + s + "'");
  return v;
}

inline json double_as_json(double x) { return json(fmt_double(x)); }

// Accepts both the string encoding and plain JSON numbers (hand-written
// configs tend to use the latter).
inline double double_from_json(const json& j) {
  if (j.is_string()) return parse_double(j.get<std::string>());
  if (j.is_number()) return j.get<double>();
  throw ConfigError("expected number or numeric string, got " + j.dump());
}

inline json doubles_as_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(fmt_double(x));
  return a;
}

inline std::vector<double> doubles_from_json(const json& j) {
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& e : j) v.push_back(double_from_json(e));
  return v;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for write: " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open: " + path.string());
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return s;
}

// Minimal CSV writer; every cell is preformatted text. Keeping the formatting
// in one place makes run outputs byte-reproducible.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : cols_(header.size()) {
    append_row_(header);
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != cols_)
      throw ConfigError("csv row width mismatch");
    append_row_(cells);
  }

  const std::string& text() const { return text_; }

  void save(const std::filesystem::path& path) const { write_text_file(path, text_); }

 private:
  void append_row_(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }

  std::size_t cols_;
  std::string text_;
};

}  // namespace nlsx
