#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace epi::data {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required column is missing or a row has the wrong number of fields.
class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> find(std::string_view column) const;
  /// Index of a column; throws SchemaError naming `source` when absent.
  std::size_t require(std::string_view column, std::string_view source) const;
};

/// RFC 4180 parsing: quoted fields, doubled quotes, CRLF or LF line ends.
/// Blank lines are skipped. Throws SchemaError on ragged rows.
CsvTable parse_csv(std::string_view text, std::string_view source = "csv");

/// Reads a plain or gzip-compressed CSV file.
CsvTable read_csv(const std::string& path);

std::string read_file(const std::string& path);  ///< gzip-transparent
void write_gzip(const std::string& path, std::string_view content);

/// Quotes a field when it contains a comma, quote or line break.
std::string csv_escape(std::string_view field);

}  // namespace epi::data
