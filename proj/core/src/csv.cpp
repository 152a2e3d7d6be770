#include "wids/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>

namespace wids::csv {

bool split_record(std::string_view line, std::vector<std::string>& fields) {
  fields.clear();
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::string field;
  std::size_t i = 0;
  const std::size_t n = line.size();
  while (true) {
    field.clear();
    if (i < n && line[i] == '"') {
      ++i;
      bool closed = false;
      while (i < n) {
        const char c = line[i++];
        if (c == '"') {
          if (i < n && line[i] == '"') {
            field.push_back('"');
            ++i;
          } else {
            closed = true;
            break;
          }
        } else {
          field.push_back(c);
        }
      }
      if (!closed) return false;
      if (i < n && line[i] != ',') return false;
    } else {
      while (i < n && line[i] != ',') {
        if (line[i] == '"') return false;
        field.push_back(line[i++]);
      }
    }
    fields.push_back(field);
    if (i >= n) break;
    ++i;  // comma
    if (i == n) {
      fields.emplace_back();
      break;
    }
  }
  return true;
}

namespace {

bool quotes_balanced(std::string_view s) {
  std::size_t quotes = 0;
  for (char c : s) quotes += (c == '"');
  return quotes % 2 == 0;
}

}  // namespace

bool read_record(std::istream& in, std::string& record, std::size_t& physical_lines) {
  record.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  ++physical_lines;
  record = std::move(line);
  while (!quotes_balanced(record)) {
    if (!std::getline(in, line)) break;  // malformed; split_record will reject it
    ++physical_lines;
    record.push_back('\n');
    record += line;
  }
  return true;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), ptr};
}

}  // namespace wids::csv
