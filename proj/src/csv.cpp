#include "feedacc/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "feedacc/error.hpp"

namespace feedacc {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// Splits the whole buffer into records; quoted fields may contain newlines.
std::vector<CsvRow> tokenize(std::string_view text, const std::string& source) {
  std::vector<CsvRow> records;
  CsvRow row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = row.size() == 1 && row.front().empty();
    if (!blank) records.push_back(std::move(row));
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started || field.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw FormatError(fmt::format("{}: unterminated quoted field", source));
  if (field_started || !field.empty() || !row.empty()) end_record();
  return records;
}

}  // namespace

CsvTable::CsvTable(CsvRow header, std::vector<CsvRow> rows, std::string source)
    : header_(std::move(header)), rows_(std::move(rows)), source_(std::move(source)) {}

std::optional<std::size_t> CsvTable::find(std::string_view column) const {
  const auto it = std::find(header_.begin(), header_.end(), column);
  if (it == header_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header_.begin());
}

std::size_t CsvTable::require(std::string_view column) const {
  if (auto idx = find(column)) return *idx;
  throw FormatError(fmt::format("{}: missing column '{}'", source_, column));
}

std::size_t CsvTable::ensure_column(std::string_view column) {
  if (auto idx = find(column)) return *idx;
  header_.emplace_back(column);
  for (auto& r : rows_) r.resize(header_.size());
  return header_.size() - 1;
}

CsvTable parse_csv(std::istream& in, std::string source) {
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  if (text.starts_with("\xEF\xBB\xBF")) text.erase(0, 3);

  auto records = tokenize(text, source);
  if (records.empty()) throw FormatError(fmt::format("{}: empty file (no header)", source));

  CsvRow header = std::move(records.front());
  for (auto& h : header) h = std::string(trim(h));
  std::vector<CsvRow> rows;
  rows.reserve(records.size() - 1);
  for (std::size_t i = 1; i < records.size(); ++i) {
    auto& r = records[i];
    r.resize(std::max(r.size(), header.size()));
    for (auto& f : r) f = std::string(trim(f));
    rows.push_back(std::move(r));
  }
  return {std::move(header), std::move(rows), std::move(source)};
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open '{}'", path.string()));
  return parse_csv(in, path.string());
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv_row(std::ostream& out, const CsvRow& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(row[i]);
  }
  out << '\n';
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(fmt::format("cannot write '{}'", path.string()));
  write_csv_row(out, table.header());
  for (const auto& r : table.rows()) write_csv_row(out, r);
}

double parse_double(std::string_view text, std::string_view what) {
  text = trim(text);
  // std::from_chars for double is available in libstdc++ 11.
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end)
    throw FormatError(fmt::format("invalid number '{}' for {}", text, what));
  return value;
}

long long parse_int(std::string_view text, std::string_view what) {
  text = trim(text);
  long long value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end)
    throw FormatError(fmt::format("invalid integer '{}' for {}", text, what));
  return value;
}

}  // namespace feedacc
