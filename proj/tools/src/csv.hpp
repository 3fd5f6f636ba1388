#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

namespace randopt::expcli {

/// RFC-4180 table with CRLF record separators.
class CsvTable {
 public:
  explicit CsvTable(const std::vector<std::string>& header) { add_row(header); }

  template <class... Fields>
  void row(const Fields&... fields) {
    static_assert(sizeof...(Fields) > 0);
    std::vector<std::string> cells{cell(fields)...};
    add_row(cells);
  }

  const std::string& str() const noexcept { return text_; }

  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(std::string_view s) { return std::string(s); }
  static std::string cell(bool b) { return b ? "true" : "false"; }
  template <class T>
  static std::string cell(const T& v) {
    return fmt::format("{}", v);
  }

 private:
  void add_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += quote(cells[i]);
    }
    text_ += "\r\n";
  }

  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + '"';
  }

  std::string text_;
};

}  // namespace randopt::expcli
