#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace truckflow::csv {

// Comma-separated table with a header row. No quoting: every cell is taken
// verbatim after trimming surrounding whitespace.
struct Table {
  std::string source;  // file path or label used in diagnostics
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based line of each row

  // Column index by name; throws a schema error when absent.
  std::size_t Column(std::string_view name) const;
  bool HasColumn(std::string_view name) const;
};

Table ReadFile(const std::filesystem::path& path);
Table ReadString(std::string_view text, std::string source);

// Reads a whole file into memory; throws an io error on failure.
std::string ReadText(const std::filesystem::path& path);
void WriteText(const std::filesystem::path& path, std::string_view text);

double ParseDouble(std::string_view cell, const Table& table, std::size_t row,
                   std::string_view column);
std::int64_t ParseInteger(std::string_view cell, const Table& table,
                          std::size_t row, std::string_view column);

// Shortest decimal text that round-trips to the same double.
std::string FormatDouble(double value);

// Identifiers are restricted to [A-Za-z0-9_-].
bool IsValidIdentifier(std::string_view id);

std::vector<std::string> Split(std::string_view line, char separator);
std::string_view Trim(std::string_view text);

}  // namespace truckflow::csv
