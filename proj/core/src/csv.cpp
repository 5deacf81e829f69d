#include "nameclass/csv.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "nameclass/types.hpp"

namespace nameclass::csv {

namespace {

// One record per call; handles quoted fields with doubled quotes and
// embedded newlines. pos is left after the record's line terminator.
std::vector<std::string> parse_record(std::string_view text, std::size_t& pos) {
  std::vector<std::string> fields;
  std::string current;
  bool in_quotes = false;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (in_quotes) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          current.push_back('"');
          ++pos;
        } else {
          in_quotes = false;
        }
      } else {
        current.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
      ++pos;
      fields.push_back(std::move(current));
      return fields;
    } else {
      current.push_back(c);
    }
  }
  if (in_quotes) throw DataError("csv: unterminated quoted field");
  fields.push_back(std::move(current));
  return fields;
}

bool record_is_blank(const std::vector<std::string>& fields) {
  return fields.size() == 1 && fields[0].empty();
}

}  // namespace

Table parse(std::string_view text) {
  Table table;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    std::vector<std::string> fields = parse_record(text, pos);
    if (record_is_blank(fields)) continue;
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  return table;
}

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open CSV file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string escape(std::string_view field) {
  const bool needs_quotes =
      field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out.put(',');
    out << escape(fields[i]);
  }
  out.put('\n');
}

std::string to_string(const Table& table) {
  std::ostringstream out;
  write_row(out, table.header);
  for (const auto& row : table.rows) write_row(out, row);
  return out.str();
}

void write_file(const std::filesystem::path& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open CSV file for writing: " + path.string());
  const std::string text = to_string(table);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("CSV write failed: " + path.string());
}

int column_index(const Table& table, std::string_view name) {
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (table.header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace nameclass::csv
