#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fleetmx::csv {

struct Row {
  std::size_t line = 0;  // 1-based physical line where the record starts
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  /// Column position by exact header name.
  std::optional<std::size_t> column(std::string_view name) const;
};

/// Comma-delimited, double-quote escaped (RFC 4180 style). Quoted fields may
/// span lines. A leading UTF-8 byte-order mark is skipped. Blank lines are
/// ignored.
Table read(std::istream& in);
Table read_file(const std::string& path);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace fleetmx::csv
