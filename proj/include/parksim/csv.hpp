#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace parksim {

/// Plain comma-separated table. Fields never contain quotes or commas in any
/// of the formats read here, so no quoting rules are applied.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string source;  // file name used in error messages
};

/// Reads a table and checks that its header matches `expected_header` exactly.
CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected_header);
CsvTable parse_csv(std::string_view text, const std::vector<std::string>& expected_header,
                   std::string source = "<memory>");

double parse_double(std::string_view field, std::string_view context);
long long parse_int(std::string_view field, std::string_view context);

/// Shortest text that round-trips to the same double.
std::string format_number(double v);

std::vector<std::string> split(std::string_view text, char sep);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace parksim
