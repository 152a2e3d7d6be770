#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace wids::csv {

/// Splits one RFC-4180 record. Returns false when the record is malformed
/// (unterminated quote, stray quote inside an unquoted field).
/// `line` must already contain any embedded newlines of quoted fields.
bool split_record(std::string_view line, std::vector<std::string>& fields);

/// Reads the next logical record (joining physical lines while a quoted
/// field is open). Returns false at end of stream. `physical_lines` is
/// incremented by the number of lines consumed.
bool read_record(std::istream& in, std::string& record, std::size_t& physical_lines);

/// Quotes a field when it contains a separator, quote, or line break.
std::string escape(std::string_view field);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

}  // namespace wids::csv
