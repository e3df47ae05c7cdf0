#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace parkzone::csv {

/// Split one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_record(std::string_view line);

/// Quote a field only when it needs it.
std::string escape(std::string_view field);

/// Header-indexed CSV reader that tracks 1-based line numbers for error messages.
class Reader {
 public:
  Reader(std::istream& in, std::string source_name);

  /// Resolve required columns by name; throws naming the first missing one.
  std::vector<std::size_t> require_columns(const std::vector<std::string_view>& names) const;

  /// Reads the next non-empty record. Returns false at end of input.
  bool next(std::vector<std::string>& fields);

  std::size_t line() const { return line_; }
  const std::string& source() const { return source_; }
  const std::vector<std::string>& header() const { return header_; }

  [[noreturn]] void error(const std::string& message) const;

 private:
  std::istream& in_;
  std::string source_;
  std::vector<std::string> header_;
  std::size_t line_ = 0;
};

double parse_double(std::string_view text, const Reader& reader, std::string_view column);
long long parse_int(std::string_view text, const Reader& reader, std::string_view column);

}  // namespace parkzone::csv
