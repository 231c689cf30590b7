#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace feedacc {

using CsvRow = std::vector<std::string>;

/// A parsed CSV file: header plus data rows (RFC 4180 quoting, optional
/// UTF-8 BOM, LF or CRLF line ends). Short rows are padded with "".
class CsvTable {
 public:
  CsvTable() = default;
  CsvTable(CsvRow header, std::vector<CsvRow> rows, std::string source = {});

  const CsvRow& header() const { return header_; }
  const std::vector<CsvRow>& rows() const { return rows_; }
  std::vector<CsvRow>& rows() { return rows_; }
  const std::string& source() const { return source_; }

  std::optional<std::size_t> find(std::string_view column) const;
  /// Index of `column`; throws FormatError naming the column and file.
  std::size_t require(std::string_view column) const;

  /// Appends `column` if absent and returns its index.
  std::size_t ensure_column(std::string_view column);

 private:
  CsvRow header_;
  std::vector<CsvRow> rows_;
  std::string source_;
};

CsvTable parse_csv(std::istream& in, std::string source = "<stream>");
CsvTable read_csv(const std::filesystem::path& path);

std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const CsvRow& row);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Number parsing with a FormatError that names the offending field.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

}  // namespace feedacc
