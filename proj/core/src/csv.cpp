#include "parkzone/csv.hpp"

#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "parkzone/error.hpp"

namespace parkzone::csv {

std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

Reader::Reader(std::istream& in, std::string source_name) : in_(in), source_(std::move(source_name)) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      header_ = split_record(line);
      for (auto& h : header_) {
        while (!h.empty() && (h.back() == ' ' || h.back() == '\t')) h.pop_back();
        while (!h.empty() && (h.front() == ' ' || h.front() == '\t')) h.erase(h.begin());
      }
      // UTF-8 byte order mark
      if (!header_.empty() && header_[0].rfind("\xEF\xBB\xBF", 0) == 0) header_[0].erase(0, 3);
      return;
    }
  }
  fail(ErrorKind::parse, fmt::format("{}: empty file, expected a header row", source_));
}

std::vector<std::size_t> Reader::require_columns(const std::vector<std::string_view>& names) const {
  std::vector<std::size_t> idx;
  idx.reserve(names.size());
  for (auto name : names) {
    std::size_t found = header_.size();
    for (std::size_t i = 0; i < header_.size(); ++i) {
      if (header_[i] == name) {
        found = i;
        break;
      }
    }
    if (found == header_.size()) {
      fail(ErrorKind::parse, fmt::format("{}: missing required column '{}'", source_, name));
    }
    idx.push_back(found);
  }
  return idx;
}

bool Reader::next(std::vector<std::string>& fields) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    fields = split_record(line);
    if (fields.size() != header_.size()) {
      error(fmt::format("expected {} fields, found {}", header_.size(), fields.size()));
    }
    return true;
  }
  return false;
}

void Reader::error(const std::string& message) const {
  fail(ErrorKind::parse, fmt::format("{}:{}: {}", source_, line_, message));
}

double parse_double(std::string_view text, const Reader& reader, std::string_view column) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    reader.error(fmt::format("column '{}': '{}' is not a number", column, text));
  }
  return value;
}

long long parse_int(std::string_view text, const Reader& reader, std::string_view column) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    reader.error(fmt::format("column '{}': '{}' is not an integer", column, text));
  }
  return value;
}

}  // namespace parkzone::csv
