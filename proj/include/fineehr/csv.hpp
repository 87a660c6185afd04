#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fineehr::csv {

struct Record {
  std::size_t line = 0;  // 1-based physical line the record starts on
  std::vector<std::string> fields;
};

/// Reads an RFC-4180 document. Quoted fields may span lines; "" inside a
/// quoted field is a literal quote. Both LF and CRLF terminators are
/// accepted. Blank lines are skipped. Malformed input throws RowError.
std::vector<Record> read(std::istream& in);

/// Index of `name` in `header`, compared case-insensitively after trimming
/// whitespace. Throws SchemaError when absent.
std::size_t require_column(const std::vector<std::string>& header,
                           std::string_view name);

std::string escape(std::string_view field);
void write_row(std::ostream& out, std::span<const std::string> fields);

std::string trim(std::string_view s);

}  // namespace fineehr::csv
