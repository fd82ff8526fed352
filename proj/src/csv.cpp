#include "fleetmx/csv.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "fleetmx/error.hpp"

namespace fleetmx::csv {

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return c;
  return std::nullopt;
}

Table read(std::istream& in) {
  Table table;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool record_has_content = false;
  std::size_t line = 1;
  std::size_t record_line = 1;
  bool first = true;

  auto end_record = [&]() {
    fields.push_back(std::move(field));
    field.clear();
    const bool blank = !record_has_content && fields.size() == 1 && fields[0].empty();
    if (!blank) {
      if (first) {
        table.header = std::move(fields);
        first = false;
      } else {
        table.rows.push_back({record_line, std::move(fields)});
      }
    }
    fields.clear();
    field_started = false;
    record_has_content = false;
  };

  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  if (content.size() >= 3 && static_cast<unsigned char>(content[0]) == 0xEF &&
      static_cast<unsigned char>(content[1]) == 0xBB && static_cast<unsigned char>(content[2]) == 0xBF)
    pos = 3;

  for (; pos < content.size(); ++pos) {
    const char ch = content[pos];
    if (in_quotes) {
      if (ch == '"') {
        if (pos + 1 < content.size() && content[pos + 1] == '"') {
          field += '"';
          ++pos;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field_started && field.empty()) {
          in_quotes = true;
          field_started = true;
          record_has_content = true;
        } else {
          field += ch;
        }
        break;
      case ',':
        fields.push_back(std::move(field));
        field.clear();
        field_started = false;
        record_has_content = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        record_line = line;
        break;
      default:
        field += ch;
        field_started = true;
        record_has_content = true;
    }
  }
  require(!in_quotes, ErrorCategory::kParse, "unterminated quoted field starting near line " + std::to_string(record_line));
  if (record_has_content || !field.empty()) end_record();
  return table;
}

Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::kIo, "cannot open '" + path + "'");
  return read(in);
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t n = 0; n < fields.size(); ++n) {
    if (n) out << ',';
    out << escape(fields[n]);
  }
  out << '\n';
}

}  // namespace fleetmx::csv
