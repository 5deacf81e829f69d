#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nameclass::csv {

// Comma-separated, UTF-8, first line is the header. Minimal quoting: a field
// is quoted only when it contains a comma, quote, CR or LF; embedded quotes
// are doubled. Fully empty lines are skipped on input.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table parse(std::string_view text);
Table read_file(const std::filesystem::path& path);

std::string escape(std::string_view field);
void write_row(std::ostream& out, std::span<const std::string> fields);
std::string to_string(const Table& table);
void write_file(const std::filesystem::path& path, const Table& table);

// Index of a header column, or -1 when absent.
int column_index(const Table& table, std::string_view name);

}  // namespace nameclass::csv
