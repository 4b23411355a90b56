#include "epi/data/csv.hpp"

#include <zlib.h>

#include <algorithm>
#include <memory>

namespace epi::data {

std::optional<std::size_t> CsvTable::find(std::string_view column) const {
  const auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

std::size_t CsvTable::require(std::string_view column, std::string_view source) const {
  if (auto i = find(column)) return *i;
  throw SchemaError(std::string(source) + ": missing column '" + std::string(column) + "'");
}

CsvTable parse_csv(std::string_view text, std::string_view source) {
  CsvTable table;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false, started = false;
  std::size_t line = 1;

  auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    const bool blank = row.size() == 1 && row[0].empty() && !any;
    if (!blank) {
      if (table.header.empty()) {
        table.header = std::move(row);
        // tolerate a UTF-8 byte order mark
        if (table.header[0].starts_with("\xEF\xBB\xBF")) table.header[0].erase(0, 3);
      } else {
        if (row.size() != table.header.size())
          throw SchemaError(std::string(source) + ": line " + std::to_string(line) + " has " +
                            std::to_string(row.size()) + " fields, header has " +
                            std::to_string(table.header.size()));
        table.rows.push_back(std::move(row));
      }
    }
    row.clear();
    any = false;
  };

  for (std::size_t k = 0; k < text.size(); ++k) {
    const char ch = text[k];
    if (quoted) {
      if (ch == '"') {
        if (k + 1 < text.size() && text[k + 1] == '"') {
          field += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"':
        // a quote opens a quoted field only at its start
        if (started) field += ch;
        quoted = !started;
        started = any = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        started = false;
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        started = false;
        ++line;
        break;
      default:
        field += ch;
        started = any = true;
    }
  }
  if (quoted) throw SchemaError(std::string(source) + ": unterminated quoted field");
  if (any || !field.empty()) end_row();
  return table;
}

std::string read_file(const std::string& path) {
  std::unique_ptr<gzFile_s, decltype(&gzclose)> f(gzopen(path.c_str(), "rb"), &gzclose);
  if (!f) throw DataError("cannot open " + path);
  std::string out;
  char buf[1 << 16];
  int n = 0;
  while ((n = gzread(f.get(), buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
  if (n < 0) throw DataError("read error in " + path);
  return out;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path), path); }

void write_gzip(const std::string& path, std::string_view content) {
  std::unique_ptr<gzFile_s, decltype(&gzclose)> f(gzopen(path.c_str(), "wb"), &gzclose);
  if (!f) throw DataError("cannot write " + path);
  std::size_t done = 0;
  while (done < content.size()) {
    const auto chunk = static_cast<unsigned>(std::min<std::size_t>(content.size() - done, 1u << 20));
    if (gzwrite(f.get(), content.data() + done, chunk) != static_cast<int>(chunk))
      throw DataError("write error in " + path);
    done += chunk;
  }
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace epi::data
