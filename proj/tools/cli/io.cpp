#include "io.hpp"

#include <fmt/core.h>

#include <charconv>
#include <cmath>
#include <fstream>

namespace esbmix::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

DataTable read_data_csv(const std::filesystem::path& path, bool header) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open data file '{}'", path.string()));
  DataTable table;
  std::string line;
  std::size_t line_no = 0;
  bool skipped_header = !header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    std::vector<double> row;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      const auto cell = rest.substr(0, comma);
      const auto value = parse_double(cell);
      if (!value) {
        throw DataError(fmt::format("{}:{}: '{}' is not a finite number", path.string(), line_no, trim(cell)));
      }
      row.push_back(*value);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (row.size() > 2) {
      throw DataError(fmt::format("{}:{}: expected 1 or 2 columns, found {}", path.string(), line_no, row.size()));
    }
    if (table.columns == 0) table.columns = row.size();
    if (row.size() != table.columns) {
      throw DataError(fmt::format("{}:{}: expected {} column(s), found {}", path.string(), line_no, table.columns,
                                  row.size()));
    }
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) throw DataError(fmt::format("{}: no observations", path.string()));
  return table;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "NA";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{:.12g}", x);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) { row(header); }

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) {
    throw std::logic_error(fmt::format("CsvWriter: row has {} cells, header has {}", cells.size(), width_));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) text_ += ',';
    if (cells[i].find_first_of(",\"\n") != std::string::npos) {
      text_ += '"';
      for (char c : cells[i]) {
        if (c == '"') text_ += '"';
        text_ += c;
      }
      text_ += '"';
    } else {
      text_ += cells[i];
    }
  }
  text_ += '\n';
}

void CsvWriter::save(const std::filesystem::path& path) const { write_text_file(path, text_); }

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error(fmt::format("write to '{}' failed", path.string()));
}

}  // namespace esbmix::cli
