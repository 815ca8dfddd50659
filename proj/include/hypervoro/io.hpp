#pragma once

// Serialization: shortest-round-trip doubles, RFC-4180 CSV with LF line
// endings, JSON via the vendored nlohmann header.

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace hypervoro {

using Json = nlohmann::json;

// 17 significant digits round-trips every finite double.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {
inline bool csv_needs_quotes(const std::string& s) {
  return s.find_first_of(",\"\n\r") != std::string::npos;
}
}  // namespace detail

inline std::string csv_escape(const std::string& field) {
  if (!detail::csv_needs_quotes(field)) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const std::vector<std::string>& header)
      : os_(os), columns_(header.size()) {
    row(header);
  }

  void row(const std::vector<std::string>& fields) {
    if (fields.size() != columns_)
      throw std::invalid_argument("CsvWriter: column count mismatch");
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os_ << ',';
      os_ << csv_escape(fields[i]);
    }
    os_ << '\n';
  }

 private:
  std::ostream& os_;
  std::size_t columns_;
};

}  // namespace hypervoro
