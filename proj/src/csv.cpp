#include "truckflow/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "truckflow/error.hpp"

namespace truckflow::csv {

std::size_t Table::Column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw Error(ErrorCode::kSchema,
                source + ": missing column '" + std::string(name) + "'");
  }
  return static_cast<std::size_t>(it - header.begin());
}

bool Table::HasColumn(std::string_view name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

std::string_view Trim(std::string_view text) {
  constexpr std::string_view kSpace = " \t\r\n";
  const auto first = text.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(kSpace);
  return text.substr(first, last - first + 1);
}

std::vector<std::string> Split(std::string_view line, char separator) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(separator, start);
    const auto piece = line.substr(
        start, pos == std::string_view::npos ? std::string_view::npos
                                             : pos - start);
    cells.emplace_back(Trim(piece));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteText(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) {
    throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
  }
}

Table ReadString(std::string_view text, std::string source) {
  Table table;
  table.source = std::move(source);
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") {
    text.remove_prefix(3);
  }
  std::size_t line_number = 0;
  bool have_header = false;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    ++line_number;
    start = end + 1;
    if (Trim(line).empty()) {
      if (end == text.size()) break;
      continue;
    }
    auto cells = Split(line, ',');
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
    } else {
      if (cells.size() != table.header.size()) {
        throw Error(ErrorCode::kParse,
                    table.source + ":" + std::to_string(line_number) +
                        ": expected " + std::to_string(table.header.size()) +
                        " fields, found " + std::to_string(cells.size()));
      }
      table.rows.push_back(std::move(cells));
      table.line_numbers.push_back(line_number);
    }
    if (end == text.size()) break;
  }
  if (!have_header) {
    throw Error(ErrorCode::kSchema, table.source + ": empty file, no header");
  }
  return table;
}

Table ReadFile(const std::filesystem::path& path) {
  return ReadString(ReadText(path), path.string());
}

namespace {

[[noreturn]] void CellError(const Table& table, std::size_t row,
                            std::string_view column, std::string_view cell,
                            std::string_view expected) {
  const std::size_t line =
      row < table.line_numbers.size() ? table.line_numbers[row] : 0;
  throw Error(ErrorCode::kParse,
              table.source + ":" + std::to_string(line) + ": column '" +
                  std::string(column) + "': expected " +
                  std::string(expected) + ", got '" + std::string(cell) + "'");
}

}  // namespace

double ParseDouble(std::string_view cell, const Table& table, std::size_t row,
                   std::string_view column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    CellError(table, row, column, cell, "a finite number");
  }
  return value;
}

std::int64_t ParseInteger(std::string_view cell, const Table& table,
                          std::size_t row, std::string_view column) {
  std::int64_t value = 0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    CellError(table, row, column, cell, "an integer");
  }
  return value;
}

std::string FormatDouble(double value) {
  if (value == 0.0) return "0";  // folds -0
  char buffer[64];
  const double mag = std::abs(value);
  const auto fmt = mag >= 1e-4 && mag < 1e16 ? std::chars_format::fixed
                                              : std::chars_format::scientific;
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value, fmt);
  return std::string(buffer, ptr);
}

bool IsValidIdentifier(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
           (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

}  // namespace truckflow::csv
