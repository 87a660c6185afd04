#include "fineehr/csv.hpp"

#include <cctype>
#include <istream>
#include <iterator>
#include <ostream>

#include "fineehr/error.hpp"

namespace fineehr::csv {

std::vector<Record> read(std::istream& in) {
  const std::string data{std::istreambuf_iterator<char>(in),
                         std::istreambuf_iterator<char>()};
  std::vector<Record> records;
  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = data.size();

  while (i < n) {
    // Skip blank lines between records.
    if (data[i] == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (data[i] == '\r' && i + 1 < n && data[i + 1] == '\n') {
      ++line;
      i += 2;
      continue;
    }

    Record rec;
    rec.line = line;
    bool end_of_record = false;
    while (!end_of_record) {
      std::string field;
      if (i < n && data[i] == '"') {
        ++i;
        bool closed = false;
        while (i < n) {
          char c = data[i];
          if (c == '"') {
            if (i + 1 < n && data[i + 1] == '"') {
              field.push_back('"');
              i += 2;
              continue;
            }
            ++i;
            closed = true;
            break;
          }
          if (c == '\n') ++line;
          field.push_back(c);
          ++i;
        }
        if (!closed) throw RowError(rec.line, "unterminated quoted field");
        if (i < n && data[i] != ',' && data[i] != '\n' && data[i] != '\r')
          throw RowError(line, "unexpected character after closing quote");
      } else {
        while (i < n && data[i] != ',' && data[i] != '\n' &&
               !(data[i] == '\r' && i + 1 < n && data[i + 1] == '\n')) {
          if (data[i] == '"')
            throw RowError(line, "quote inside unquoted field");
          field.push_back(data[i]);
          ++i;
        }
      }
      rec.fields.push_back(std::move(field));

      if (i >= n) {
        end_of_record = true;
      } else if (data[i] == ',') {
        ++i;
      } else if (data[i] == '\n') {
        ++i;
        ++line;
        end_of_record = true;
      } else if (data[i] == '\r' && i + 1 < n && data[i + 1] == '\n') {
        i += 2;
        ++line;
        end_of_record = true;
      } else {
        throw RowError(line, "stray carriage return");
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

namespace {
bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}
}  // namespace

std::size_t require_column(const std::vector<std::string>& header,
                           std::string_view name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (iequals(trim(header[i]), name)) return i;
  }
  throw SchemaError(std::string(name));
}

std::string escape(std::string_view field) {
  const bool needs_quotes =
      field.find_first_of(",\"\r\n") != std::string_view::npos ||
      (!field.empty() && (std::isspace(static_cast<unsigned char>(field.front())) ||
                          std::isspace(static_cast<unsigned char>(field.back()))));
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

}  // namespace fineehr::csv
